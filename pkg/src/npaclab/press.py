"""Simulated ground-truth printer and spectrophotometer.

The press synthesizes Neugebauer primary spectra from a stacked-filter
(Beer-Lambert) ink model: each drop of ink i multiplies the substrate
reflectance by that ink's transmittance curve. Per-channel drift gains
scale the transmittance exponent (an ink-amount change), dot gain
distorts effective coverages, and measurement adds seeded Gaussian noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .colorimetry import N_SAMPLES, ReflectanceSpectrum
from .errors import EnumerationCapError, FileFormatError
from .neugebauer import (
    MATERIALIZATION_CAP,
    InkSet,
    NPac,
    NPTable,
    YNParams,
    decode_id,
    np_count,
    predict,
)

DRIFT_GAIN_RANGE = (0.0, 2.0)  # gains live in (0, 2]


@dataclass(frozen=True)
class PressModel:
    """Virtual printer state: ink filters, drift, dot gain, sensor noise."""

    inkset: InkSet
    substrate: np.ndarray          # (36,) reflectance in [0, 1]
    transmittances: np.ndarray     # (n, 36), values in (0, 1]
    drift_gains: np.ndarray = None  # (n,), default all 1.0
    dot_gain: float = 0.0
    noise_sigma: float = 0.0
    yn: YNParams = field(default_factory=YNParams)
    press_id: str = "press"

    def __post_init__(self):
        sub = np.asarray(self.substrate, dtype=np.float64)
        trans = np.asarray(self.transmittances, dtype=np.float64)
        gains = (np.ones(self.inkset.n) if self.drift_gains is None
                 else np.asarray(self.drift_gains, dtype=np.float64))
        if sub.shape != (N_SAMPLES,) or np.any(sub < 0) or np.any(sub > 1):
            raise ValueError("substrate must be 36 reflectance factors in [0, 1]")
        if trans.shape != (self.inkset.n, N_SAMPLES):
            raise ValueError(f"need one {N_SAMPLES}-sample transmittance per channel")
        if np.any(trans <= 0) or np.any(trans > 1):
            raise ValueError("transmittances must lie in (0, 1]")
        if gains.shape != (self.inkset.n,):
            raise ValueError("need one drift gain per channel")
        if np.any(gains <= DRIFT_GAIN_RANGE[0]) or np.any(gains > DRIFT_GAIN_RANGE[1]):
            raise ValueError("drift gains must lie in (0, 2]")
        if self.dot_gain < 0:
            raise ValueError("dot gain must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        for arr in (sub, trans, gains):
            arr.flags.writeable = False
        object.__setattr__(self, "substrate", sub)
        object.__setattr__(self, "transmittances", trans)
        object.__setattr__(self, "drift_gains", gains)

    # -- serialization ------------------------------------------------

    def to_dict(self):
        return {
            "press_id": self.press_id,
            "inkset": self.inkset.to_dict(),
            "substrate": [round(float(v), 9) for v in self.substrate],
            "inks": [
                {"name": name, "transmittance": [round(float(v), 9) for v in self.transmittances[i]]}
                for i, name in enumerate(self.inkset.names)
            ],
            "dot_gain": self.dot_gain,
            "noise_sigma": self.noise_sigma,
            "drift": [float(g) for g in self.drift_gains],
            "yn_exponent": self.yn.n_yn,
        }

    @classmethod
    def from_dict(cls, d) -> "PressModel":
        try:
            inkset = InkSet.from_dict(d["inkset"])
            ink_by_name = {rec["name"]: rec["transmittance"] for rec in d["inks"]}
            if set(ink_by_name) != set(inkset.names):
                raise FileFormatError("ink entries do not match the ink set's channel names")
            trans = np.array([ink_by_name[name] for name in inkset.names], dtype=np.float64)
            return cls(
                inkset=inkset,
                substrate=np.array(d["substrate"], dtype=np.float64),
                transmittances=trans,
                drift_gains=np.array(d.get("drift", np.ones(inkset.n)), dtype=np.float64),
                dot_gain=float(d.get("dot_gain", 0.0)),
                noise_sigma=float(d.get("noise_sigma", 0.0)),
                yn=YNParams(float(d.get("yn_exponent", 2.0))),
                press_id=str(d.get("press_id", "press")),
            )
        except FileFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"malformed press model: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "PressModel":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc


@dataclass(frozen=True)
class ChartPatch:
    """One printable patch: either an explicit NPac or a single-ink coverage."""

    npac: NPac = None
    channel: str = None
    coverage: float = None

    def __post_init__(self):
        if (self.npac is None) == (self.channel is None):
            raise ValueError("a patch is either an NPac or a (channel, coverage) pair")
        if self.channel is not None and not 0.0 <= self.coverage <= 1.0:
            raise ValueError("ink coverage must lie in [0, 1]")

    def to_npac(self, inkset: InkSet) -> NPac:
        """Resolve to an NPac (single-ink patches mix solid ink with substrate)."""
        if self.npac is not None:
            return self.npac
        ch = inkset.channel_index(self.channel)
        drops = [0] * inkset.n
        drops[ch] = inkset.k - 1
        solid_id = 0
        for d in reversed(drops):
            solid_id = solid_id * inkset.k + d
        if self.coverage <= 0.0:
            return NPac.single(0)
        if self.coverage >= 1.0:
            return NPac.single(solid_id)
        return NPac(((0, 1.0 - self.coverage), (solid_id, self.coverage)))

    def to_dict(self):
        if self.npac is not None:
            return {"npac": self.npac.as_dict()}
        return {"channel": self.channel, "coverage": self.coverage}

    @classmethod
    def from_dict(cls, d) -> "ChartPatch":
        if "npac" in d:
            return cls(npac=NPac.from_dict(d["npac"]))
        return cls(channel=d["channel"], coverage=float(d["coverage"]))


@dataclass(frozen=True)
class Chart:
    """Ordered list of patches to print and measure."""

    patches: tuple

    def __post_init__(self):
        patches = tuple(self.patches)
        if not patches:
            raise ValueError("a chart needs at least one patch")
        object.__setattr__(self, "patches", patches)

    def __len__(self):
        return len(self.patches)

    def npacs(self, inkset: InkSet):
        return [p.to_npac(inkset) for p in self.patches]

    def to_list(self):
        return [p.to_dict() for p in self.patches]

    @classmethod
    def from_list(cls, seq) -> "Chart":
        try:
            return cls(tuple(ChartPatch.from_dict(d) for d in seq))
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"malformed chart: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_list(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "Chart":
        try:
            return cls.from_list(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc


def synth_np_spectrum(press: PressModel, drops) -> np.ndarray:
    """Stacked-filter reflectance of one primary: substrate * prod t_i^(d_i*g_i)."""
    exponents = np.asarray(drops, dtype=np.float64) * press.drift_gains
    return press.substrate * np.prod(press.transmittances ** exponents[:, None], axis=0)


def synth_np_table(press: PressModel, ids=None, cap: int = MATERIALIZATION_CAP) -> NPTable:
    """Synthesize the press's NP spectra table (or a requested id subset)."""
    if ids is None:
        count = np_count(press.inkset)
        if count > cap:
            raise EnumerationCapError(
                f"{count} primaries exceed the materialization cap {cap}; pass an id subset")
        ids = range(count)
    spectra = {int(i): synth_np_spectrum(press, decode_id(int(i), press.inkset)) for i in ids}
    return NPTable(press.inkset, spectra, press.yn)


def apply_drift(press: PressModel, gains) -> PressModel:
    """New press with the given per-channel drift gains (input untouched)."""
    gains = np.asarray(gains, dtype=np.float64)
    if gains.shape != (press.inkset.n,):
        raise ValueError(f"expected {press.inkset.n} gains, got {gains.shape}")
    if np.any(gains <= DRIFT_GAIN_RANGE[0]) or np.any(gains > DRIFT_GAIN_RANGE[1]):
        raise ValueError("drift gains must lie in (0, 2]")
    return replace(press, drift_gains=gains)


def dot_gain_adjust(npac: NPac, dot_gain: float) -> NPac:
    """Coverage power-law distortion w' ~ w^(1/(1+g)), renormalized."""
    if dot_gain == 0.0 or len(npac.entries) == 1:
        return npac
    w = npac.weights() ** (1.0 / (1.0 + dot_gain))
    w /= w.sum()
    return NPac(tuple(zip(npac.ids(), w)))


def measure(press: PressModel, chart: Chart, seed) -> list:
    """Print and measure a chart; returns one ReflectanceSpectrum per patch.

    Ground truth is the Yule-Nielsen prediction over the drifted press's
    synthesized primaries with dot gain applied to the coverages, plus
    i.i.d. Gaussian noise per spectral sample, clamped to [0, 1].
    Bit-identical for identical seeds.
    """
    npacs = chart.npacs(press.inkset)
    needed = sorted({i for npac in npacs for i in npac.ids()})
    table = synth_np_table(press, ids=needed)
    rng = np.random.default_rng(seed)
    out = []
    for npac in npacs:
        spec = predict(dot_gain_adjust(npac, press.dot_gain), table).values
        if press.noise_sigma > 0.0:
            spec = spec + rng.normal(0.0, press.noise_sigma, size=N_SAMPLES)
        out.append(ReflectanceSpectrum(np.clip(spec, 0.0, 1.0)))
    return out


def single_channel_ramp(inkset: InkSet, channel: str, steps: int = 16) -> list:
    """Ramp patches for one channel: coverages 1/steps .. 1.0."""
    return [ChartPatch(channel=channel, coverage=s / steps) for s in range(1, steps + 1)]


def calibration_chart(inkset: InkSet, steps: int = 16) -> Chart:
    """Substrate patch followed by a coverage ramp per channel."""
    patches = [ChartPatch(npac=NPac.single(0))]
    for name in inkset.names:
        patches.extend(single_channel_ramp(inkset, name, steps))
    return Chart(tuple(patches))
