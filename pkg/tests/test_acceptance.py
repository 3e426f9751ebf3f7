"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line per criterion (run with -s to watch them stream)."""

import json
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

from npaclab import gamut as gm
from npaclab import halftone as ht
from npaclab.calibration import build_reference, recalibrate
from npaclab.cli import main as cli_main
from npaclab.colorimetry import LabColor, delta_e2000, delta_e2000_array, spectra_to_lab_array
from npaclab.errors import OutOfGamutError
from npaclab.neugebauer import InkSet, NPac, enumerate_nps, np_count, predict, predict_lab
from npaclab.press import apply_drift

from conftest import random_npac


@contextmanager
def criterion(number, budget_s, description):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[ACCEPTANCE {number}] FAIL ({time.perf_counter() - start:.1f}s): {description}")
        raise
    elapsed = time.perf_counter() - start
    print(f"[ACCEPTANCE {number}] PASS ({elapsed:.1f}s): {description}")
    assert elapsed < budget_s, f"criterion {number} exceeded its {budget_s}s budget"


@pytest.fixture(scope="module")
def cmyk_gamut(cmyk_table, vc):
    return gm.build_gamut(cmyk_table, vc=vc)


def test_criterion_1_np_combinatorics():
    with criterion(1, 1.0, "NP combinatorics: 2^3 = 8 primaries (S..CMY), 4^14 > 268M"):
        cmy = InkSet(("c", "m", "y"), levels=2)
        assert np_count(cmy) == 8
        drops = {d for _, d in enumerate_nps(cmy)}
        assert drops == {(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
                         (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)}
        wide = InkSet(tuple(f"i{j}" for j in range(14)), levels=4)
        assert np_count(wide) == 268_435_456


def test_criterion_2_forward_model(cmyk_table):
    with criterion(2, 10.0, "forward model: identity, bounding, merge invariance, "
                            "plain convexity over 1000 randomized cases"):
        rng = np.random.default_rng(2024)
        table = cmyk_table
        lin1 = table.matrix  # n_yn = 1 linear domain is reflectance itself
        for case in range(1000):
            npac = random_npac(rng, table)
            rows = table.rows_for(npac.ids())
            out = predict(npac, table).values

            # per-wavelength bounding by constituent primaries
            spectra = table.matrix[rows]
            assert np.all(out >= spectra.min(axis=0) - 1e-9)
            assert np.all(out <= spectra.max(axis=0) + 1e-9)

            if case % 10 == 0:
                # weight-1 identity is bit-exact
                single = predict(NPac.single(int(npac.ids()[0])), table).values
                np.testing.assert_array_equal(single, table.matrix[rows[0]])

                # duplicate-merge invariance at 1e-12
                split = []
                for i, w in npac.entries:
                    split.append((i, w / 3))
                    split.append((i, 2 * w / 3))
                merged_out = predict(NPac(tuple(split)), table).values
                np.testing.assert_allclose(merged_out, out, atol=1e-12)

                # n_yn = 1 is the exact convex combination
                from npaclab.neugebauer import YNParams

                got = predict(npac, table, YNParams(1.0)).values
                np.testing.assert_allclose(got, npac.weights() @ lin1[rows], atol=1e-9)


def test_criterion_3_halftone_coverage(cmyk_table, vc):
    with criterion(3, 60.0, "halftone coverage: 100 random NPacs on 256x256, per-NP "
                            "error < 0.02, color shift < 1 dE2000, Bayer exact counts"):
        rng = np.random.default_rng(3033)
        matrix = ht.blue_noise_matrix(64, seed=9, levels=256)
        for _ in range(100):
            npac = random_npac(rng, cmyk_table)
            img = ht.NPacImage.constant(npac, 256, 256)
            out = ht.halftone(img, matrix)
            cov = ht.measure_coverages(out)
            for i, w in npac.entries:
                assert abs(cov.weight_of(i) - w) < 0.02
            shift = delta_e2000(predict_lab(cov, cmyk_table, vc=vc),
                                predict_lab(npac, cmyk_table, vc=vc))
            assert shift < 1.0

        img = ht.NPacImage.constant(NPac(((0, 0.5), (15, 0.5))), 64, 64)
        counts = np.bincount(ht.halftone(img, ht.bayer_matrix(16)).pixels.ravel(),
                             minlength=16)
        assert counts[0] == 2048 and counts[15] == 2048


def _dense_surface_labs(gamut, spacing=0.1, cap=300):
    chunks = []
    for tri in gamut.facets:
        labs = gamut.np_labs[tri]
        edge = max(np.linalg.norm(labs[a] - labs[b]) for a, b in ((0, 1), (1, 2), (0, 2)))
        m = min(cap, max(1, int(np.ceil(edge / spacing))))
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        keep = (i + j) <= m
        bary = np.stack([i[keep] / m, j[keep] / m, 1 - i[keep] / m - j[keep] / m], axis=1)
        lin = (bary[:, :, None] * gamut.linear[tri]).sum(axis=1)
        chunks.append(spectra_to_lab_array(np.clip(lin, 0, 1) ** gamut.yn.n_yn, gamut.vc))
    return np.concatenate(chunks)


def test_criterion_4_separation_roundtrip(cmyk_table, cmyk_gamut, vc):
    with criterion(4, 120.0, "separation: 100 in-gamut round trips < 0.5 dE2000; "
                             "out-of-gamut matches within 0.2 of dense oracle"):
        rng = np.random.default_rng(4044)
        for _ in range(100):
            npac = random_npac(rng, cmyk_table)
            target = predict_lab(npac, cmyk_table, vc=vc)
            got = gm.invert(target, cmyk_gamut)
            back = predict_lab(got, cmyk_table, vc=vc)
            assert delta_e2000(back, target) < 0.5

        dense = _dense_surface_labs(cmyk_gamut)
        oog_count = 0
        while oog_count < 10:
            lab = LabColor(float(rng.uniform(10, 95)),
                           float(rng.uniform(-120, 120)),
                           float(rng.uniform(-120, 120)))
            try:
                gm.invert(lab, cmyk_gamut)
            except OutOfGamutError as err:
                oracle = float(delta_e2000_array(dense, lab.as_array()[None, :]).min())
                assert err.closest.de <= oracle + 0.2
                oog_count += 1


def test_criterion_5_side_by_side_reachability(eight_ink_press, eight_ink_table, vc):
    with criterion(5, 120.0, "side-by-side K/R escapes independent-screen patterns "
                             "by > 2 dE2000 (0.05 coverage grid); products stay in hull"):
        inkset = eight_ink_press.inkset
        gamut = gm.build_gamut(eight_ink_table, vc=vc, surface_spacing=3.0)
        iK = inkset.channel_index("black")
        iR = inkset.channel_index("red")
        idK, idR = 1 << iK, 1 << iR

        # hull-subset half: K/R grid and random all-ink product patterns
        rng = np.random.default_rng(5055)
        grid = np.arange(0.0, 1.0 + 1e-9, 0.05)
        for aK in grid[::2]:
            for aR in grid[::2]:
                cov = np.zeros(8)
                cov[iK], cov[iR] = aK, aR
                assert gamut.contains_npac(gm.independent_coverage_npac(inkset, cov))
        for _ in range(100):
            cov = rng.uniform(0.0, 1.0, 8)
            assert gamut.contains_npac(gm.independent_coverage_npac(inkset, cov))

        # margin half: brute-force product grid over the two inks involved
        side = NPac(((idK, 0.7), (idR, 0.3)))
        side_lab = predict_lab(side, eight_ink_table, vc=vc)
        best = np.inf
        for aK in grid:
            for aR in grid:
                cov = np.zeros(8)
                cov[iK], cov[iR] = aK, aR
                product = gm.independent_coverage_npac(inkset, cov)
                de = delta_e2000(predict_lab(product, eight_ink_table, vc=vc), side_lab)
                best = min(best, de)
        assert best > 2.0, f"nearest product form at {best:.2f} dE2000"


def test_criterion_6_closed_loop_calibration(cmyk_press, vc):
    with criterion(6, 60.0, "calibration: 20 random drifts in [0.85, 1.15], sigma 0.001 "
                            "-> mean < 1.0, max < 3.0, <= 3 iterations, LUTs monotone"):
        press = replace(cmyk_press, noise_sigma=0.001)
        reference = build_reference(press, vc=vc, seed=606)
        rng = np.random.default_rng(6066)
        for trial in range(20):
            drifted = apply_drift(press, rng.uniform(0.85, 1.15, 4))
            luts, report = recalibrate(drifted, reference, vc=vc, seed=7000 + trial)
            assert report.converged and report.iterations <= 3
            assert report.residual_mean[-1] < 1.0
            assert report.residual_max[-1] < 3.0
            for lut in luts.luts:
                assert lut.entries[0] == 0.0
                assert lut.entries[-1] <= 1.0
                assert np.all(np.diff(lut.entries) >= 0.0)


def test_criterion_7_spot_alternatives(cmyk_gamut):
    with criterion(7, 30.0, "spot alternatives: cells on hull facets, center minimizes "
                            "the metric, grid is (2n_h+1)x(2n_l+1) minus ragged"):
        targets = [LabColor(60, 40, -20), LabColor(35, 15, 20),
                   LabColor(85, -10, 70), LabColor(50, 0, 0)]
        for target in targets:
            grid = gm.alternatives_grid(target, cmyk_gamut, n_h=3, n_l=3)
            assert len(grid.cells) + len(grid.ragged) == 7 * 7
            center_de = grid.cells[(0, 0)].de_to_target
            for (i, j), cell in grid.cells.items():
                bary = np.asarray(cell.bary)
                assert np.all(bary >= -1e-9)
                assert bary.sum() == pytest.approx(1.0, abs=1e-9)
                q = bary @ cmyk_gamut.q_points[cmyk_gamut.facets[cell.facet]]
                eq = cmyk_gamut._hull3.equations[cell.facet]
                assert abs(eq[:3] @ q + eq[3]) < 1e-8  # on the hull surface
                assert cell.de_to_target >= center_de - 1e-9


def test_criterion_8_cli_determinism(tmp_path, capsys):
    with criterion(8, 120.0, "determinism: halftone, chart measure --seed and "
                             "calibrate --seed are bit-identical across runs"):
        press = tmp_path / "press.json"
        assert cli_main(["press", "demo", "--name", "cmyk", "--out", str(press)]) == 0

        chart = tmp_path / "chart.json"
        chart.write_text(json.dumps([{"npac": {"0": 0.5, "15": 0.5}},
                                     {"channel": "cyan", "coverage": 0.75}]))

        ref = tmp_path / "ref.json"
        assert cli_main(["calibrate", "--press", str(press), "--make-reference",
                         "--out-reference", str(ref), "--seed", "11"]) == 0

        drifted = tmp_path / "drifted.json"
        assert cli_main(["press", "drift", "--press", str(press),
                         "--gains", "0.9,1.05,1.0,0.95", "--out", str(drifted)]) == 0

        outputs = {}
        for run_id in ("a", "b"):
            ht_out = tmp_path / f"ht_{run_id}.pgm"
            assert cli_main(["halftone", "--press", str(press),
                             "--npac", '{"0":0.4,"9":0.6}', "--size", "96x64",
                             "--matrix", "bluenoise64", "--seed", "3",
                             "--out", str(ht_out)]) == 0
            meas_out = tmp_path / f"meas_{run_id}.json"
            assert cli_main(["chart", "measure", "--press", str(press),
                             "--chart", str(chart), "--seed", "5",
                             "--out", str(meas_out)]) == 0
            luts_out = tmp_path / f"luts_{run_id}.json"
            assert cli_main(["calibrate", "--press", str(drifted),
                             "--reference", str(ref), "--out-luts", str(luts_out),
                             "--seed", "9"]) == 0
            outputs[run_id] = (ht_out.read_bytes(), meas_out.read_bytes(),
                               luts_out.read_bytes())
        capsys.readouterr()
        assert outputs["a"] == outputs["b"]
