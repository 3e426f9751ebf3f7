import csv
import math
from pathlib import Path

import numpy as np
import pytest

from npaclab import colorimetry as cm

DATA = Path(__file__).parent / "data"


def spectrum(values):
    return cm.ReflectanceSpectrum(np.asarray(values, dtype=float))


class TestSpectrumToXyz:
    def test_zero_spectrum(self, vc):
        xyz = cm.spectrum_to_xyz(spectrum(np.zeros(36)), vc)
        assert (xyz.X, xyz.Y, xyz.Z) == (0.0, 0.0, 0.0)

    def test_perfect_reflector_is_whitepoint(self, vc):
        # independent oracle: direct summation over the shipped CSV tables
        illum, xbar, ybar, zbar = [], [], [], []
        data_dir = Path(cm.__file__).parent / "data"
        with open(data_dir / "illuminant_d50_10nm.csv") as fh:
            for rec in csv.DictReader(fh):
                illum.append(float(rec["value"]))
        with open(data_dir / "cie_1931_2deg_10nm.csv") as fh:
            for rec in csv.DictReader(fh):
                xbar.append(float(rec["xbar"]))
                ybar.append(float(rec["ybar"]))
                zbar.append(float(rec["zbar"]))
        k = 100.0 / sum(i * y for i, y in zip(illum, ybar))
        expect = (k * sum(i * x for i, x in zip(illum, xbar)),
                  100.0,
                  k * sum(i * z for i, z in zip(illum, zbar)))

        xyz = cm.spectrum_to_xyz(spectrum(np.ones(36)), vc)
        assert xyz.Y == pytest.approx(100.0, abs=1e-12)
        assert xyz.X == pytest.approx(expect[0], abs=1e-9)
        assert xyz.Z == pytest.approx(expect[2], abs=1e-9)

    def test_linearity_in_scale(self, vc):
        rng = np.random.default_rng(7)
        s = rng.uniform(0.0, 1.0, 36)
        full = cm.spectrum_to_xyz(spectrum(s), vc)
        half = cm.spectrum_to_xyz(spectrum(0.5 * s), vc)
        assert half.X == pytest.approx(0.5 * full.X, rel=1e-12)
        assert half.Y == pytest.approx(0.5 * full.Y, rel=1e-12)
        assert half.Z == pytest.approx(0.5 * full.Z, rel=1e-12)

    def test_linearity_in_mixtures(self, vc):
        rng = np.random.default_rng(8)
        s1 = rng.uniform(0, 1, 36)
        s2 = rng.uniform(0, 1, 36)
        a, b = 0.3, 0.6
        lhs = cm.spectra_to_xyz_array(a * s1 + b * s2, vc)
        rhs = a * cm.spectra_to_xyz_array(s1, vc) + b * cm.spectra_to_xyz_array(s2, vc)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            spectrum(np.ones(35))
        with pytest.raises(ValueError):
            spectrum(np.full(36, 1.5))


class TestLab:
    def test_whitepoint_maps_to_white(self, vc):
        lab = cm.xyz_to_lab(vc.whitepoint, vc)
        assert lab.L == pytest.approx(100.0, abs=1e-12)
        assert lab.a == pytest.approx(0.0, abs=1e-12)
        assert lab.b == pytest.approx(0.0, abs=1e-12)

    def test_black_maps_to_zero(self, vc):
        lab = cm.xyz_to_lab(cm.XYZColor(0, 0, 0), vc)
        assert (lab.L, lab.a, lab.b) == (0.0, 0.0, 0.0)

    def test_flat_gray_is_neutral(self, vc):
        lab = cm.spectrum_to_lab(spectrum(np.full(36, 0.18)), vc)
        assert abs(lab.a) < 0.1
        assert abs(lab.b) < 0.1

    def test_roundtrip_identity(self, vc):
        for L in np.linspace(0, 100, 21):
            for a in (-60.0, -5.0, 0.0, 12.0, 80.0):
                for b in (-70.0, 0.0, 44.0):
                    lab = cm.LabColor(float(L), a, b)
                    back = cm.xyz_to_lab_array(cm.lab_to_xyz_array(lab.as_array(), vc), vc)
                    np.testing.assert_allclose(back, lab.as_array(), atol=1e-9)

    def test_chroma_hue_derivation(self):
        lab = cm.LabColor(50.0, 3.0, -4.0)
        assert lab.C == pytest.approx(5.0)
        assert lab.h == pytest.approx(math.degrees(math.atan2(-4.0, 3.0)) % 360.0)


class TestDeltaE:
    def test_de76_identity(self):
        c = cm.LabColor(41.0, 3.0, -9.0)
        assert cm.delta_e76(c, c) == 0.0

    def test_de76_axis_aligned(self):
        assert cm.delta_e76(cm.LabColor(50, 0, 0), cm.LabColor(60, 0, 0)) == pytest.approx(10.0)

    def test_de76_matches_euclidean_norm(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rng.uniform([0, -80, -80], [100, 80, 80])
            q = rng.uniform([0, -80, -80], [100, 80, 80])
            got = cm.delta_e76(cm.LabColor(*p), cm.LabColor(*q))
            assert got == pytest.approx(float(np.linalg.norm(p - q)), rel=1e-12)

    def test_de2000_identity(self):
        c = cm.LabColor(50.0, 2.5, 0.0)
        assert cm.delta_e2000(c, c) == 0.0

    def test_de2000_reference_pair(self):
        a = cm.LabColor(50.0, 2.6772, -79.7751)
        b = cm.LabColor(50.0, 0.0, -82.7485)
        assert cm.delta_e2000(a, b) == pytest.approx(2.0425, abs=1e-4)

    def test_de2000_full_verification_set(self):
        rows = []
        with open(DATA / "ciede2000_pairs.csv") as fh:
            for rec in csv.DictReader(fh):
                rows.append([float(rec[k]) for k in ("L1", "a1", "b1", "L2", "a2", "b2", "de00")])
        arr = np.asarray(rows)
        assert len(arr) == 34
        got = cm.delta_e2000_array(arr[:, 0:3], arr[:, 3:6])
        np.testing.assert_allclose(got, arr[:, 6], atol=1e-4)

    @pytest.mark.parametrize("metric", ["de76", "de2000"])
    def test_metric_properties(self, metric):
        fn = cm.resolve_metric(metric)
        rng = np.random.default_rng(11)
        for _ in range(30):
            p = cm.LabColor(*rng.uniform([0, -80, -80], [100, 80, 80]))
            q = cm.LabColor(*rng.uniform([0, -80, -80], [100, 80, 80]))
            assert fn(p, q) >= 0.0
            assert fn(p, q) == pytest.approx(fn(q, p), rel=1e-9)
            assert fn(p, p) == 0.0

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError):
            cm.resolve_metric("de_bogus")


class TestSrgb:
    def test_white_encodes_near_255(self, vc):
        wp = vc.whitepoint.as_array()
        rgb = cm.xyz_to_srgb8_array(wp, whitepoint=wp)
        assert rgb.min() >= 254

    def test_black_encodes_to_zero(self):
        rgb = cm.xyz_to_srgb8_array(np.zeros(3))
        assert rgb.max() == 0

    def test_hex_format(self, vc):
        hx = cm.lab_to_srgb_hex(cm.LabColor(50, 10, -30), vc)
        assert len(hx) == 7 and hx.startswith("#")
        int(hx[1:], 16)

    def test_hex_lab_roundtrip(self, vc):
        for lab in (cm.LabColor(50, 10, -30), cm.LabColor(72, -20, 40),
                    cm.LabColor(25, 5, 5)):
            hx = cm.lab_to_srgb_hex(lab, vc)
            back = cm.srgb_hex_to_lab(hx, vc)
            assert cm.delta_e76(lab, back) < 0.6  # 8-bit quantization floor

    def test_bad_hex_rejected(self, vc):
        with pytest.raises(ValueError):
            cm.srgb_hex_to_lab("#12345", vc)
