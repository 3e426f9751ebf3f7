"""HTTP service hosting the spot-color refinement workflow.

One press per service instance. Sessions are kept in memory and persisted
to an append-only JSON-lines event log; replaying the log restores every
session exactly (grids are stored in the events, never recomputed).
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .cli import load_press
from .colorimetry import LabColor, d50_2deg, lab_to_srgb_hex, srgb_hex_to_lab
from .gamut import SurfaceMatch, alternatives_grid, build_gamut, closest_on_gamut
from .neugebauer import NPac
from .press import synth_np_table
from .serialize import grid_to_dict, lab_to_list, match_to_dict

ENV_PREFIX = "NPACLAB_"

GRID_DEFAULTS = {"n_h": 3, "n_l": 3, "step_h": 4.0, "step_l": 3.0}


@dataclass
class ServiceConfig:
    press_path: str
    listen_addr: str = "127.0.0.1:8040"
    session_log_path: str = "spot_sessions.jsonl"
    gamut_cache_path: str | None = None
    ui_dir: str | None = None

    @classmethod
    def load(cls, path) -> "ServiceConfig":
        doc = json.loads(Path(path).read_text())
        cfg = cls(
            press_path=doc["press_path"],
            listen_addr=doc.get("listen_addr", "127.0.0.1:8040"),
            session_log_path=doc.get("session_log_path", "spot_sessions.jsonl"),
            gamut_cache_path=doc.get("gamut_cache_path"),
            ui_dir=doc.get("ui_dir"),
        )
        return cfg.with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        """NPACLAB_<FIELD> environment variables override file values."""
        for name in ("press_path", "listen_addr", "session_log_path",
                     "gamut_cache_path", "ui_dir"):
            val = os.environ.get(ENV_PREFIX + name.upper())
            if val:
                setattr(self, name, val)
        return self


@dataclass
class SpotSession:
    """Server-side refinement state; history is append-only and the final
    selection, once confirmed, never changes."""

    session_id: str
    target: LabColor
    params: dict
    center: SurfaceMatch
    grid_doc: dict
    grid_cell_locs: list = field(default_factory=list)
    history: list = field(default_factory=list)
    final: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class SessionStore:
    """In-memory sessions backed by a JSONL event log."""

    def __init__(self, log_path):
        self.log_path = Path(log_path)
        self.sessions: dict = {}
        self._write_lock = threading.Lock()

    def append(self, event: dict):
        with self._write_lock:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, separators=(",", ":")) + "\n")

    def replay(self, service: "SpotService"):
        if not self.log_path.is_file():
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                service.apply_event(event, record=False)


class SpotService:
    """Domain facade the HTTP layer delegates to (also used by replay)."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.vc = d50_2deg()
        self.press = load_press(config.press_path)
        self.table = synth_np_table(self.press)
        self.gamut = build_gamut(self.table, vc=self.vc)
        self.store = SessionStore(config.session_log_path)
        self.mesh = self._load_mesh()
        self.store.replay(self)

    def _load_mesh(self) -> dict:
        cache = self.config.gamut_cache_path
        if cache and Path(cache).is_file():
            return json.loads(Path(cache).read_text())
        mesh = self.gamut.to_mesh_dict()
        if cache:
            Path(cache).write_text(json.dumps(mesh, separators=(",", ":")) + "\n")
        return mesh

    # -- session operations -------------------------------------------

    def create_session(self, target_lab, params: dict) -> SpotSession:
        target = LabColor(*target_lab)
        grid = alternatives_grid(target, self.gamut, **params)
        event = {
            "event": "create",
            "session_id": uuid.uuid4().hex,
            "ts": time.time(),
            "target_lab": lab_to_list(target),
            "params": params,
            "grid": grid_to_dict(grid, self.vc),
            "center": match_to_dict(grid.center, self.vc),
            "center_loc": {"facet": grid.center.facet, "bary": list(grid.center.bary)},
        }
        session = self.apply_event(event, record=True)
        return session

    def select(self, session_id: str, hue_offset: float, lightness_offset: float) -> SpotSession:
        session = self.sessions_get(session_id)
        with session.lock:
            if session.final is not None:
                raise SessionConfirmed(session_id)
            cell = self._find_cell(session, hue_offset, lightness_offset)
            if cell is None:
                raise CellNotInGrid(hue_offset, lightness_offset)
            # re-center on the picked cell's surface point
            match = self.gamut.match_at(cell["facet"], cell["bary"],
                                        session.target, session.grid_doc["metric"])
            grid = alternatives_grid(session.target, self.gamut,
                                     metric=session.grid_doc["metric"],
                                     center=match,
                                     **session.params)
            event = {
                "event": "select",
                "session_id": session_id,
                "ts": time.time(),
                "selected": {"hue_offset": hue_offset, "lightness_offset": lightness_offset},
                "grid": grid_to_dict(grid, self.vc),
                "center": match_to_dict(match, self.vc),
                "center_loc": {"facet": match.facet, "bary": list(match.bary)},
            }
            return self.apply_event(event, record=True)

    def confirm(self, session_id: str) -> SpotSession:
        session = self.sessions_get(session_id)
        with session.lock:
            if session.final is not None:
                return session  # idempotent
            event = {
                "event": "confirm",
                "session_id": session_id,
                "ts": time.time(),
                "final": dict(session.grid_doc["center"]),
            }
            return self.apply_event(event, record=True)

    def _find_cell(self, session: SpotSession, hue_offset, lightness_offset):
        for cell, loc in zip(session.grid_doc["cells"], session.grid_cell_locs):
            if (abs(cell["hue_offset"] - hue_offset) < 1e-9
                    and abs(cell["lightness_offset"] - lightness_offset) < 1e-9):
                return loc
        return None

    def sessions_get(self, session_id: str) -> SpotSession:
        try:
            return self.store.sessions[session_id]
        except KeyError:
            raise UnknownSession(session_id) from None

    # -- event application (live and replay take the same path) ---------

    def apply_event(self, event: dict, record: bool) -> SpotSession:
        kind = event["event"]
        if kind == "create":
            target = LabColor(*event["target_lab"])
            center = self._match_from_loc(event["center_loc"], target,
                                          event["grid"]["metric"])
            session = SpotSession(
                session_id=event["session_id"],
                target=target,
                params=event["params"],
                center=center,
                grid_doc=event["grid"],
                grid_cell_locs=self._cell_locs(event["grid"], center),
            )
            session.history.append({"ts": event["ts"], "kind": "create",
                                    "center": event["center"]})
            self.store.sessions[session.session_id] = session
        elif kind == "select":
            session = self.sessions_get(event["session_id"])
            center = self._match_from_loc(event["center_loc"], session.target,
                                          event["grid"]["metric"])
            session.center = center
            session.grid_doc = event["grid"]
            session.grid_cell_locs = self._cell_locs(event["grid"], center)
            session.history.append({"ts": event["ts"], "kind": "select",
                                    "selected": event["selected"],
                                    "center": event["center"]})
        elif kind == "confirm":
            session = self.sessions_get(event["session_id"])
            session.final = event["final"]
            session.history.append({"ts": event["ts"], "kind": "confirm"})
        else:
            raise ValueError(f"unknown session event {kind!r}")
        if record:
            self.store.append(event)
        return session

    def _match_from_loc(self, loc, target, metric) -> SurfaceMatch:
        return self.gamut.match_at(loc["facet"], loc["bary"], target, metric)

    def _cell_locs(self, grid_doc, center: SurfaceMatch):
        """Facet/bary locations for each serialized cell, center included."""
        locs = []
        target = LabColor(*grid_doc["target_lab"])
        for cell in grid_doc["cells"]:
            if cell["hue_offset"] == 0.0 and cell["lightness_offset"] == 0.0:
                locs.append({"facet": center.facet, "bary": list(center.bary)})
            else:
                locs.append(self._locate_cell(cell))
        return locs

    def _locate_cell(self, cell_doc):
        npac = NPac.from_dict(cell_doc["npac"])
        rows = self.table.rows_for(npac.ids())
        # find the hull facet holding these vertices
        facet, bary = self._facet_of_rows(rows, npac.weights())
        return {"facet": facet, "bary": bary}

    def _facet_of_rows(self, rows, weights):
        row_set = set(int(r) for r in rows)
        for f, tri in enumerate(self.gamut.facets):
            tri_set = set(int(v) for v in tri)
            if row_set <= tri_set:
                bary = [0.0, 0.0, 0.0]
                for r, w in zip(rows, weights):
                    bary[list(tri).index(int(r))] = float(w)
                return f, bary
        raise ValueError("cell NPac does not lie on a single hull facet")


class UnknownSession(Exception):
    pass


class SessionConfirmed(Exception):
    pass


class CellNotInGrid(Exception):
    pass


def session_doc(session: SpotSession, vc) -> dict:
    doc = {"session_id": session.session_id,
           "target_lab": lab_to_list(session.target),
           "target_srgb_hex": lab_to_srgb_hex(session.target, vc),
           "grid": session.grid_doc,
           "history_len": len(session.history),
           "confirmed": session.final is not None}
    if session.final is not None:
        doc["final"] = {"lab": session.final["lab"],
                        "npac": session.final["npac"],
                        "srgb_hex": session.final["srgb_hex"]}
    return doc


def create_app(config: ServiceConfig) -> FastAPI:
    service = SpotService(config)
    app = FastAPI(title="npaclab spot service", docs_url=None, redoc_url=None)
    app.state.service = service

    def bad_request(msg):
        return JSONResponse({"error": msg}, status_code=400)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "press_id": service.press.press_id}

    @app.get("/api/gamut/mesh")
    def gamut_mesh():
        return service.mesh

    @app.post("/api/spot/session", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return bad_request("body is not valid JSON")
        target = body.get("target_lab")
        if target is None and isinstance(body.get("target_hex"), str):
            # hex targets are decoded server-side; the UI stays colorimetry-free
            try:
                lab = srgb_hex_to_lab(body["target_hex"], service.vc)
            except ValueError as exc:
                return bad_request(str(exc))
            target = [lab.L, lab.a, lab.b]
        if (not isinstance(target, (list, tuple)) or len(target) != 3
                or not all(isinstance(v, (int, float)) for v in target)):
            return bad_request("target_lab must be [L, a, b]")
        if not 0.0 <= target[0] <= 100.0:
            return bad_request("L must lie in [0, 100]")
        params = {}
        for key, default in GRID_DEFAULTS.items():
            val = body.get(key, default)
            if not isinstance(val, (int, float)) or val <= 0:
                return bad_request(f"{key} must be a positive number")
            params[key] = int(val) if key.startswith("n_") else float(val)
        session = service.create_session(target, params)
        return JSONResponse(session_doc(session, service.vc), status_code=201)

    @app.post("/api/spot/session/{session_id}/select")
    async def select(session_id: str, request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return bad_request("body is not valid JSON")
        try:
            h = float(body["hue_offset"])
            l = float(body["lightness_offset"])
        except (KeyError, TypeError, ValueError):
            return bad_request("need numeric hue_offset and lightness_offset")
        try:
            session = service.select(session_id, h, l)
        except UnknownSession:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        except SessionConfirmed:
            return JSONResponse({"error": "session already confirmed"}, status_code=409)
        except CellNotInGrid:
            return bad_request("no grid cell at the requested offsets")
        return session_doc(session, service.vc)

    @app.post("/api/spot/session/{session_id}/confirm")
    def confirm(session_id: str):
        try:
            session = service.confirm(session_id)
        except UnknownSession:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return {"session_id": session.session_id, "final": session.final and {
            "lab": session.final["lab"],
            "npac": session.final["npac"],
            "srgb_hex": session.final["srgb_hex"],
        }}

    @app.get("/api/spot/session/{session_id}")
    def get_session(session_id: str):
        try:
            session = service.sessions_get(session_id)
        except UnknownSession:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return session_doc(session, service.vc)

    ui_dir = config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def run_service(config: ServiceConfig):
    import uvicorn

    host, _, port = config.listen_addr.rpartition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port))
