import numpy as np
import pytest

from npaclab import press as vp
from npaclab.errors import EnumerationCapError, FileFormatError
from npaclab.neugebauer import InkSet, NPac


class TestSynth:
    def test_substrate_primary_is_substrate(self, cmyk_press):
        table = vp.synth_np_table(cmyk_press)
        np.testing.assert_array_equal(table.spectrum_of(0).values, cmyk_press.substrate)

    def test_extra_drop_never_brightens(self, cmyk_press):
        table = vp.synth_np_table(cmyk_press)
        k = cmyk_press.inkset.k
        for np_id in range(1, 16):
            # strip one ink: dividing the id by k zeroes channel 0's drop etc.
            drops = list(vp.decode_id(np_id, cmyk_press.inkset))
            for ch in range(4):
                if drops[ch] == 0:
                    continue
                lighter = drops.copy()
                lighter[ch] -= 1
                lighter_id = sum(d * k**i for i, d in enumerate(lighter))
                assert np.all(table.spectrum_of(np_id).values
                              <= table.spectrum_of(lighter_id).values + 1e-15)

    def test_unit_gains_change_nothing(self, cmyk_press):
        drifted = vp.apply_drift(cmyk_press, np.ones(4))
        a = vp.synth_np_table(cmyk_press).matrix
        b = vp.synth_np_table(drifted).matrix
        np.testing.assert_array_equal(a, b)

    def test_cap_refusal_and_subset(self):
        inkset = InkSet(tuple(f"i{j}" for j in range(14)), levels=4)
        press = vp.PressModel(
            inkset=inkset,
            substrate=np.full(36, 0.95),
            transmittances=np.full((14, 36), 0.8),
        )
        with pytest.raises(EnumerationCapError):
            vp.synth_np_table(press)
        table = vp.synth_np_table(press, ids=[0, 1, 5])
        assert len(table) == 3


class TestMeasure:
    def test_noiseless_equals_prediction(self, cmyk_press):
        from dataclasses import replace

        from npaclab.neugebauer import predict

        clean = replace(cmyk_press, noise_sigma=0.0, dot_gain=0.0)
        chart = vp.Chart((vp.ChartPatch(npac=NPac(((0, 0.5), (15, 0.5)))),))
        got = vp.measure(clean, chart, seed=1)[0]
        expect = predict(NPac(((0, 0.5), (15, 0.5))), vp.synth_np_table(clean))
        np.testing.assert_array_equal(got.values, expect.values)

    def test_single_primary_patches_exact(self, cmyk_press):
        from dataclasses import replace

        clean = replace(cmyk_press, noise_sigma=0.0)
        table = vp.synth_np_table(clean)
        chart = vp.Chart(tuple(vp.ChartPatch(npac=NPac.single(i)) for i in range(16)))
        for i, spec in enumerate(vp.measure(clean, chart, seed=0)):
            np.testing.assert_array_equal(spec.values, table.spectrum_of(i).values)

    def test_same_seed_bit_identical(self, cmyk_press):
        chart = vp.calibration_chart(cmyk_press.inkset, steps=4)
        a = vp.measure(cmyk_press, chart, seed=42)
        b = vp.measure(cmyk_press, chart, seed=42)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.values, y.values)

    def test_noise_magnitude(self, cmyk_press):
        from dataclasses import replace

        noisy = replace(cmyk_press, noise_sigma=0.002, dot_gain=0.0)
        chart = vp.Chart((vp.ChartPatch(npac=NPac(((0, 0.5), (3, 0.5)))),))
        reps = np.stack([vp.measure(noisy, chart, seed=s)[0].values for s in range(1000)])
        std = reps.std(axis=0).mean()
        assert std == pytest.approx(0.002, rel=0.10)

    def test_dot_gain_shifts_midtones(self, cmyk_press):
        from dataclasses import replace

        flat_press = replace(cmyk_press, noise_sigma=0.0, dot_gain=0.0)
        gain_press = replace(cmyk_press, noise_sigma=0.0, dot_gain=0.5)
        chart = vp.Chart((vp.ChartPatch(channel="black", coverage=0.25),))
        lo = vp.measure(flat_press, chart, seed=0)[0].values
        hi = vp.measure(gain_press, chart, seed=0)[0].values
        # dot gain boosts small coverages -> more ink -> darker patch
        assert hi.mean() < lo.mean()


class TestDrift:
    def test_identity_gains_noop(self, cmyk_press):
        same = vp.apply_drift(cmyk_press, np.ones(4))
        np.testing.assert_array_equal(same.drift_gains, cmyk_press.drift_gains)
        assert same.press_id == cmyk_press.press_id

    def test_under_gain_lightens_solid(self, cmyk_press):
        drifted = vp.apply_drift(cmyk_press, [0.9, 1.0, 1.0, 1.0])
        solid_c = vp.synth_np_table(cmyk_press).spectrum_of(1).values
        solid_c_drift = vp.synth_np_table(drifted).spectrum_of(1).values
        assert np.all(solid_c_drift >= solid_c - 1e-15)
        assert solid_c_drift.sum() > solid_c.sum()

    def test_monotone_in_gain(self, cmyk_press):
        prev = None
        for g in (0.8, 0.9, 1.0, 1.1, 1.2):
            table = vp.synth_np_table(vp.apply_drift(cmyk_press, [g, 1, 1, 1]))
            total = table.spectrum_of(1).values.sum()
            if prev is not None:
                assert total < prev
            prev = total

    def test_out_of_range_rejected(self, cmyk_press):
        with pytest.raises(ValueError):
            vp.apply_drift(cmyk_press, [0.0, 1, 1, 1])
        with pytest.raises(ValueError):
            vp.apply_drift(cmyk_press, [1, 1, 1, 2.5])

    def test_input_press_untouched(self, cmyk_press):
        before = cmyk_press.drift_gains.copy()
        vp.apply_drift(cmyk_press, [0.9, 1.1, 1.0, 1.0])
        np.testing.assert_array_equal(cmyk_press.drift_gains, before)


class TestChart:
    def test_calibration_chart_shape(self, cmyk_press):
        chart = vp.calibration_chart(cmyk_press.inkset, steps=16)
        assert len(chart) == 4 * 16 + 1

    def test_ink_patch_resolves_to_two_primaries(self, cmyk_press):
        patch = vp.ChartPatch(channel="magenta", coverage=0.25)
        npac = patch.to_npac(cmyk_press.inkset)
        assert npac.ids() == (0, 2)
        assert npac.weight_of(2) == pytest.approx(0.25)

    def test_chart_json_roundtrip(self, cmyk_press, tmp_path):
        chart = vp.calibration_chart(cmyk_press.inkset, steps=2)
        path = tmp_path / "chart.json"
        chart.save(path)
        loaded = vp.Chart.load(path)
        assert loaded.to_list() == chart.to_list()


class TestPressIO:
    def test_json_roundtrip(self, cmyk_press, tmp_path):
        path = tmp_path / "press.json"
        cmyk_press.save(path)
        loaded = vp.PressModel.load(path)
        assert loaded.inkset == cmyk_press.inkset
        assert loaded.press_id == cmyk_press.press_id
        np.testing.assert_allclose(loaded.substrate, cmyk_press.substrate, atol=1e-9)
        np.testing.assert_allclose(loaded.transmittances, cmyk_press.transmittances, atol=1e-9)

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FileFormatError):
            vp.PressModel.load(path)
        path.write_text('{"inkset": {"n": 1, "k": 2, "names": ["k"]}}')
        with pytest.raises(FileFormatError):
            vp.PressModel.load(path)
