"""Closed-loop color consistency: per-channel 1D coverage LUTs that pull a
drifted press back to its reference response.

The scalar channel response is dE76 from the substrate patch along the
channel's coverage ramp: monotone in coverage for any subtractive ink and
stable under the illuminant. Each iteration prints the ramps through the
current LUTs, measures, fits a monotone response curve per channel
(pool-adjacent-violators), and rebuilds the LUT as reference-response
composed with the inverse measured response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colorimetry import ViewingCondition, d50_2deg, delta_e2000_array, spectra_to_lab_array
from .errors import FileFormatError, NonConvergenceError
from .neugebauer import NPac, decode_id, np_count
from .press import Chart, ChartPatch, PressModel, calibration_chart, measure

LUT_SIZE = 256
DEFAULT_THRESHOLD = 1.0  # mean chart dE2000 to reference
DEFAULT_REPEATS = 3


@dataclass(frozen=True)
class ChannelLUT:
    """256-entry map from nominal to corrected coverage; monotone, 0-pinned."""

    name: str
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.shape != (LUT_SIZE,):
            raise ValueError(f"LUT needs {LUT_SIZE} entries")
        if np.any(e < 0.0) or np.any(e > 1.0):
            raise ValueError("LUT entries must lie in [0, 1]")
        if np.any(np.diff(e) < 0.0):
            raise ValueError("LUT entries must be non-decreasing")
        if e[0] != 0.0:
            raise ValueError("LUT must map 0 to 0")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    def apply(self, coverage: float) -> float:
        """Linear interpolation between entries."""
        x = min(max(float(coverage), 0.0), 1.0) * (LUT_SIZE - 1)
        lo = int(x)
        if lo >= LUT_SIZE - 1:
            return float(self.entries[-1])
        frac = x - lo
        return float((1.0 - frac) * self.entries[lo] + frac * self.entries[lo + 1])

    @classmethod
    def identity(cls, name: str) -> "ChannelLUT":
        return cls(name, np.linspace(0.0, 1.0, LUT_SIZE))


@dataclass(frozen=True)
class LUTSet:
    """One LUT per press channel plus provenance metadata."""

    luts: tuple  # ChannelLUT per channel, press channel order
    press_id: str = "press"
    built_at: str = ""
    residual_mean_de2000: float = float("nan")

    def lut_for(self, name: str) -> ChannelLUT:
        for lut in self.luts:
            if lut.name == name:
                return lut
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "channels": [{"name": l.name, "entries": [float(v) for v in l.entries]}
                         for l in self.luts],
            "built_at": self.built_at,
            "press_id": self.press_id,
            "residual_mean_de2000": self.residual_mean_de2000,
        }

    @classmethod
    def from_dict(cls, d) -> "LUTSet":
        try:
            luts = tuple(ChannelLUT(ch["name"], np.asarray(ch["entries"], dtype=np.float64))
                         for ch in d["channels"])
            return cls(luts=luts, press_id=str(d.get("press_id", "press")),
                       built_at=str(d.get("built_at", "")),
                       residual_mean_de2000=float(d.get("residual_mean_de2000", "nan")))
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"malformed LUT set: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "LUTSet":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc

    @classmethod
    def identity(cls, inkset, press_id="press") -> "LUTSet":
        return cls(tuple(ChannelLUT.identity(n) for n in inkset.names), press_id=press_id)


@dataclass(frozen=True)
class CalibrationReference:
    """Noise-averaged reference chart measurement of a healthy press."""

    steps: int
    channel_names: tuple
    labs: np.ndarray           # (1 + n*steps, 3), substrate first
    press_id: str = "press"

    def __post_init__(self):
        labs = np.asarray(self.labs, dtype=np.float64)
        expect = 1 + len(self.channel_names) * self.steps
        if labs.shape != (expect, 3):
            raise ValueError(f"expected {expect} patch Labs, got {labs.shape}")
        if not np.all(np.isfinite(labs)):
            raise ValueError("reference Labs must be finite")
        labs.flags.writeable = False
        object.__setattr__(self, "labs", labs)

    def chart(self) -> Chart:
        patches = [ChartPatch(npac=NPac.single(0))]
        for name in self.channel_names:
            for s in range(1, self.steps + 1):
                patches.append(ChartPatch(channel=name, coverage=s / self.steps))
        return Chart(tuple(patches))

    def channel_slice(self, ch: int) -> slice:
        start = 1 + ch * self.steps
        return slice(start, start + self.steps)

    def responses(self) -> np.ndarray:
        """Reference response curves: (n, steps+1) dE76 from substrate,
        including the 0-coverage anchor."""
        sub = self.labs[0]
        out = np.zeros((len(self.channel_names), self.steps + 1))
        for ch in range(len(self.channel_names)):
            ramp = self.labs[self.channel_slice(ch)]
            out[ch, 1:] = np.linalg.norm(ramp - sub, axis=1)
        return out


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    iterations: int
    threshold: float
    residual_mean: tuple   # per-iteration mean chart dE2000 vs reference
    residual_max: tuple

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "threshold": self.threshold,
            "iteration_residuals": [
                {"mean_de2000": m, "max_de2000": x}
                for m, x in zip(self.residual_mean, self.residual_max)
            ],
        }


def _measure_labs(press: PressModel, chart: Chart, seed, vc: ViewingCondition) -> np.ndarray:
    spectra = np.stack([s.values for s in measure(press, chart, seed)])
    return spectra_to_lab_array(spectra, vc)


def build_reference(press: PressModel, steps: int = 16,
                    vc: ViewingCondition | None = None, seed=0,
                    repeats: int = DEFAULT_REPEATS) -> CalibrationReference:
    """Measure the nominal press's calibration chart, averaging out noise."""
    vc = vc or d50_2deg()
    chart = calibration_chart(press.inkset, steps)
    seeds = np.random.SeedSequence(seed).spawn(repeats)
    spectra = None
    for s in seeds:
        rep = np.stack([m.values for m in measure(press, chart, s)])
        spectra = rep if spectra is None else spectra + rep
    labs = spectra_to_lab_array(spectra / repeats, vc)
    return CalibrationReference(steps=steps, channel_names=press.inkset.names,
                                labs=labs, press_id=press.press_id)


def _pava_nondecreasing(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators: least-squares non-decreasing fit."""
    y = np.asarray(y, dtype=np.float64)
    vals = y.copy()
    weights = np.ones_like(y)
    i = 0
    while i < len(vals) - 1:
        if vals[i] > vals[i + 1] + 1e-15:
            merged = (vals[i] * weights[i] + vals[i + 1] * weights[i + 1]) / (weights[i] + weights[i + 1])
            weights[i] += weights[i + 1]
            vals[i] = merged
            vals = np.delete(vals, i + 1)
            weights = np.delete(weights, i + 1)
            i = max(i - 1, 0)
        else:
            i += 1
    # expand pooled blocks back to sample positions
    out = np.empty_like(y)
    pos = 0
    for v, w in zip(vals, weights):
        out[pos:pos + int(w)] = v
        pos += int(w)
    return out


def apply_luts_to_chart(chart: Chart, luts: LUTSet, inkset=None) -> Chart:
    return Chart(tuple(apply_luts(p, luts, inkset) for p in chart.patches))


def apply_luts(request, luts: LUTSet, inkset=None):
    """Correct a print request through the channel LUTs.

    Single-ink patches map their coverage directly. NPacs decompose into
    per-channel effective coverages (sum of weights of primaries inked on
    that channel, scaled by drop fraction); each primary's weight is then
    scaled by the per-channel correction ratios of the channels it uses,
    with the substrate weight absorbing the slack (renormalized if the
    corrections exceed unity).
    """
    if isinstance(request, ChartPatch):
        if request.channel is not None:
            lut = luts.lut_for(request.channel)
            return ChartPatch(channel=request.channel, coverage=lut.apply(request.coverage))
        return ChartPatch(npac=apply_luts(request.npac, luts, inkset))
    npac: NPac = request
    if npac.ids() == (0,):
        return npac  # bare substrate carries no ink to correct
    if inkset is None:
        raise ValueError("NPac correction needs the ink set for drop decomposition")
    k = inkset.k
    names = inkset.names
    coverage = np.zeros(inkset.n)
    drops_of = {i: decode_id(i, inkset) for i in npac.ids()}
    for np_id, w in npac.entries:
        for ch, d in enumerate(drops_of[np_id]):
            coverage[ch] += w * d / (k - 1)
    ratios = np.ones(inkset.n)
    for ch in range(inkset.n):
        if coverage[ch] > 0.0:
            ratios[ch] = luts.lut_for(names[ch]).apply(coverage[ch]) / coverage[ch]
    new_entries = {}
    inked_total = 0.0
    for np_id, w in npac.entries:
        scale = 1.0
        for ch, d in enumerate(drops_of[np_id]):
            if d:
                scale *= ratios[ch] ** (d / (k - 1))
        if np_id == 0:
            continue
        w_new = w * scale
        if w_new > 0.0:
            new_entries[np_id] = w_new
            inked_total += w_new
    slack = 1.0 - inked_total
    if slack > 1e-12 or npac.weight_of(0) > 0.0:
        new_entries[0] = max(slack, 1e-12) if slack > 1e-12 else new_entries.get(0, 0.0)
    if slack <= 1e-12 and 0 in new_entries and new_entries[0] <= 0.0:
        del new_entries[0]
    total = sum(new_entries.values())
    return NPac(tuple((i, w / total) for i, w in new_entries.items()))


def recalibrate(press: PressModel, reference: CalibrationReference,
                max_iters: int = 3, threshold: float = DEFAULT_THRESHOLD,
                vc: ViewingCondition | None = None, seed=0,
                initial_luts: LUTSet | None = None):
    """Closed-loop LUT update until the chart matches the reference.

    Returns (LUTSet, ConvergenceReport); raises NonConvergenceError (with
    the report attached to ``residuals``) if the threshold is unmet after
    ``max_iters`` print-measure-fit rounds.
    """
    if tuple(reference.channel_names) != tuple(press.inkset.names):
        raise ValueError("reference chart does not match the press ink set")
    vc = vc or d50_2deg()
    chart = reference.chart()
    ref_resp = reference.responses()
    ref_cov = np.linspace(0.0, 1.0, reference.steps + 1)
    grid = np.linspace(0.0, 1.0, LUT_SIZE)
    luts = initial_luts or LUTSet.identity(press.inkset, press.press_id)
    seeds = np.random.SeedSequence(seed).spawn(max_iters)

    means, maxes = [], []
    fitted = luts
    for it in range(max_iters):
        printed = apply_luts_to_chart(chart, luts, press.inkset)
        labs = _measure_labs(press, printed, seeds[it], vc)
        de = delta_e2000_array(labs, reference.labs)
        means.append(float(de.mean()))
        maxes.append(float(de.max()))

        # fit fresh LUTs from this round's response samples
        sub = labs[0]
        new = []
        for ch, name in enumerate(press.inkset.names):
            lut = luts.lut_for(name)
            phys = np.array([0.0] + [lut.apply(c) for c in ref_cov[1:]])
            resp = np.zeros(reference.steps + 1)
            resp[1:] = np.linalg.norm(labs[reference.channel_slice(ch)] - sub, axis=1)
            order = np.argsort(phys)
            phys_s, resp_s = phys[order], _pava_nondecreasing(resp[order])
            # target reference response at each nominal grid coverage
            target = np.interp(grid, ref_cov, ref_resp[ch])
            entries = np.interp(target, resp_s, phys_s,
                                left=phys_s[0], right=phys_s[-1])
            entries = np.maximum.accumulate(np.clip(entries, 0.0, 1.0))
            entries[0] = 0.0
            new.append(ChannelLUT(name, entries))
        fitted = LUTSet(tuple(new), press_id=press.press_id,
                        residual_mean_de2000=means[-1])

        if means[-1] < threshold:
            report = ConvergenceReport(True, it + 1, threshold,
                                       tuple(means), tuple(maxes))
            return fitted, report
        luts = fitted

    report = ConvergenceReport(False, max_iters, threshold, tuple(means), tuple(maxes))
    raise NonConvergenceError(
        f"mean chart dE2000 {means[-1]:.3f} after {max_iters} iterations "
        f"(threshold {threshold})", residuals=report)
