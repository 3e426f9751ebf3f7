import json

import pytest
from fastapi.testclient import TestClient

from npaclab.service import ServiceConfig, create_app

from conftest import validate_schema


@pytest.fixture()
def config(tmp_path):
    return ServiceConfig(
        press_path="demo:cmyk",
        listen_addr="127.0.0.1:0",
        session_log_path=str(tmp_path / "sessions.jsonl"),
    )


@pytest.fixture()
def client(config):
    with TestClient(create_app(config)) as c:
        yield c


def make_session(client, target=(60.0, 30.0, -20.0), **params):
    body = {"target_lab": list(target), **params}
    resp = client.post("/api/spot/session", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


class TestBasics:
    def test_health(self, client):
        resp = client.get("/api/health")
        assert resp.status_code == 200
        doc = resp.json()
        validate_schema(doc, "health.json")
        assert doc == {"status": "ok", "press_id": "demo_cmyk"}

    def test_gamut_mesh(self, client):
        resp = client.get("/api/gamut/mesh")
        assert resp.status_code == 200
        validate_schema(resp.json(), "gamut_mesh.json")

    def test_mesh_cache_roundtrip(self, tmp_path):
        cfg = ServiceConfig(press_path="demo:cmyk",
                            session_log_path=str(tmp_path / "s.jsonl"),
                            gamut_cache_path=str(tmp_path / "mesh.json"))
        with TestClient(create_app(cfg)) as c:
            first = c.get("/api/gamut/mesh").json()
        assert (tmp_path / "mesh.json").is_file()
        with TestClient(create_app(cfg)) as c:
            assert c.get("/api/gamut/mesh").json() == first


class TestSessionLifecycle:
    def test_create_validates_schema(self, client):
        doc = make_session(client)
        validate_schema(doc, "spot_session.json")
        assert doc["confirmed"] is False
        assert doc["history_len"] == 1
        grid = doc["grid"]
        assert len(grid["cells"]) + len(grid["ragged"]) == 49

    def test_create_matches_cli_grid(self, client, capsys):
        # CLI and service are thin adapters over the same library call
        from npaclab.cli import main

        doc = make_session(client, target=(55.0, 25.0, 10.0))
        code = main(["spot", "match", "--press", "demo:cmyk", "--target", "55,25,10"])
        assert code == 0
        cli_grid = json.loads(capsys.readouterr().out)
        assert cli_grid == doc["grid"]

    def test_create_from_hex_target(self, client):
        resp = client.post("/api/spot/session", json={"target_hex": "#7a4b8f"})
        assert resp.status_code == 201
        doc = resp.json()
        validate_schema(doc, "spot_session.json")
        # server decoded the hex; round trip through its own encoder agrees
        assert doc["target_srgb_hex"] == "#7a4b8f"

    def test_bad_hex_400(self, client):
        resp = client.post("/api/spot/session", json={"target_hex": "#xyz"})
        assert resp.status_code == 400

    def test_custom_grid_params(self, client):
        doc = make_session(client, n_h=1, n_l=2, step_h=6.0, step_l=2.0)
        grid = doc["grid"]
        assert grid["n_h"] == 1 and grid["n_l"] == 2
        assert len(grid["cells"]) + len(grid["ragged"]) == 3 * 5

    def test_malformed_body_400(self, client):
        resp = client.post("/api/spot/session", json={"target_lab": [1, 2]})
        assert resp.status_code == 400
        assert "error" in resp.json()
        resp = client.post("/api/spot/session", json={"target_lab": [300, 0, 0]})
        assert resp.status_code == 400
        resp = client.post("/api/spot/session",
                           content=b"{not json", headers={"content-type": "application/json"})
        assert resp.status_code == 400

    def test_confirm_without_select_is_center(self, client):
        doc = make_session(client)
        resp = client.post(f"/api/spot/session/{doc['session_id']}/confirm")
        assert resp.status_code == 200
        final = resp.json()["final"]
        validate_schema(resp.json(), "spot_final.json")
        assert final["lab"] == doc["grid"]["center"]["lab"]
        assert final["srgb_hex"] == doc["grid"]["center"]["srgb_hex"]

    def test_select_center_is_fixed_point(self, client):
        doc = make_session(client)
        resp = client.post(f"/api/spot/session/{doc['session_id']}/select",
                           json={"hue_offset": 0.0, "lightness_offset": 0.0})
        assert resp.status_code == 200
        new = resp.json()
        assert new["grid"]["center"]["lab"] == doc["grid"]["center"]["lab"]
        assert new["grid"]["cells"] == doc["grid"]["cells"]
        assert new["history_len"] == 2

    def test_select_recenters_hue(self, client):
        doc = make_session(client)
        old_center = doc["grid"]["center"]["lab"]
        import math

        old_h = math.degrees(math.atan2(old_center[2], old_center[1])) % 360.0
        resp = client.post(f"/api/spot/session/{doc['session_id']}/select",
                           json={"hue_offset": 4.0, "lightness_offset": 0.0})
        assert resp.status_code == 200
        new_center = resp.json()["grid"]["center"]["lab"]
        new_h = math.degrees(math.atan2(new_center[2], new_center[1])) % 360.0
        dh = min(abs(new_h - old_h - 4.0), 360 - abs(new_h - old_h - 4.0))
        assert dh < 0.5
        assert abs(new_center[0] - old_center[0]) < 0.25

    def test_select_unknown_offsets_400(self, client):
        doc = make_session(client)
        resp = client.post(f"/api/spot/session/{doc['session_id']}/select",
                           json={"hue_offset": 999.0, "lightness_offset": 0.0})
        assert resp.status_code == 400

    def test_unknown_session_404(self, client):
        resp = client.post("/api/spot/session/deadbeef/select",
                           json={"hue_offset": 0.0, "lightness_offset": 0.0})
        assert resp.status_code == 404
        assert client.post("/api/spot/session/deadbeef/confirm").status_code == 404
        assert client.get("/api/spot/session/deadbeef").status_code == 404

    def test_mutation_after_confirm_409(self, client):
        doc = make_session(client)
        sid = doc["session_id"]
        assert client.post(f"/api/spot/session/{sid}/confirm").status_code == 200
        resp = client.post(f"/api/spot/session/{sid}/select",
                           json={"hue_offset": 4.0, "lightness_offset": 0.0})
        assert resp.status_code == 409

    def test_confirm_idempotent(self, client):
        doc = make_session(client)
        sid = doc["session_id"]
        a = client.post(f"/api/spot/session/{sid}/confirm")
        b = client.post(f"/api/spot/session/{sid}/confirm")
        assert a.status_code == b.status_code == 200
        assert a.json() == b.json()

    def test_get_session_state(self, client):
        doc = make_session(client)
        resp = client.get(f"/api/spot/session/{doc['session_id']}")
        assert resp.status_code == 200
        assert resp.json() == doc


class TestPersistence:
    def test_restart_restores_sessions_byte_identically(self, config):
        with TestClient(create_app(config)) as client:
            doc = make_session(client, target=(62.0, 18.0, 22.0))
            sid = doc["session_id"]
            client.post(f"/api/spot/session/{sid}/select",
                        json={"hue_offset": -4.0, "lightness_offset": 3.0})
            client.post(f"/api/spot/session/{sid}/confirm")
            before = client.get(f"/api/spot/session/{sid}").json()

        # fresh app instance over the same event log
        with TestClient(create_app(config)) as client:
            after = client.get(f"/api/spot/session/{sid}").json()
        assert json.dumps(after, sort_keys=True) == json.dumps(before, sort_keys=True)

    def test_log_is_append_only_jsonl(self, config):
        with TestClient(create_app(config)) as client:
            doc = make_session(client)
            client.post(f"/api/spot/session/{doc['session_id']}/confirm")
        lines = [json.loads(l) for l in
                 open(config.session_log_path).read().splitlines() if l]
        assert [e["event"] for e in lines] == ["create", "confirm"]

    def test_env_override(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"press_path": "demo:cmyk",
                                        "session_log_path": str(tmp_path / "a.jsonl")}))
        monkeypatch.setenv("NPACLAB_SESSION_LOG_PATH", str(tmp_path / "b.jsonl"))
        cfg = ServiceConfig.load(cfg_path)
        assert cfg.session_log_path == str(tmp_path / "b.jsonl")
