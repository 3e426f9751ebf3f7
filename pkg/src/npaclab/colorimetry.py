"""Spectral-to-colorimetric conversions and color difference metrics.

Everything runs on a fixed spectral grid: 380-730 nm in 10 nm steps
(36 samples), matching common spectrophotometer output. The CIE tables
bundled under ``npaclab/data`` are resampled to that grid once at load
time and cached.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

WAVELENGTH_START = 380.0
WAVELENGTH_STEP = 10.0
N_SAMPLES = 36
WAVELENGTHS = WAVELENGTH_START + WAVELENGTH_STEP * np.arange(N_SAMPLES)

# CIE 1976 L*a*b* constants, exact rational forms
_LAB_EPSILON = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0


def _load_table(name, columns):
    """Read a bundled CSV table and return one array per requested column."""
    path = resources.files("npaclab.data").joinpath(name)
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append([float(rec[c]) for c in columns])
    arr = np.asarray(rows, dtype=np.float64)
    if arr.shape[0] != N_SAMPLES:
        raise ValueError(f"{name}: expected {N_SAMPLES} rows, got {arr.shape[0]}")
    return [arr[:, i].copy() for i in range(len(columns))]


@dataclass(frozen=True)
class ReflectanceSpectrum:
    """Sampled spectral reflectance on the fixed 36-sample grid."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (N_SAMPLES,):
            raise ValueError(f"spectrum must have {N_SAMPLES} samples, got {vals.shape}")
        if np.any(vals < 0.0) or np.any(vals > 1.0):
            raise ValueError("reflectance factors must lie in [0, 1]")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class XYZColor:
    """CIE tristimulus values, Y = 100 for the perfect reflector."""

    X: float
    Y: float
    Z: float

    def __post_init__(self):
        if self.X < 0 or self.Y < 0 or self.Z < 0:
            raise ValueError("tristimulus values must be non-negative")

    def as_array(self):
        return np.array([self.X, self.Y, self.Z])


@dataclass(frozen=True)
class LabColor:
    """CIE 1976 L*a*b* with derived chroma and hue angle."""

    L: float
    a: float
    b: float

    @property
    def C(self):
        """Chroma, sqrt(a^2 + b^2)."""
        return math.hypot(self.a, self.b)

    @property
    def h(self):
        """Hue angle in degrees, [0, 360)."""
        return math.degrees(math.atan2(self.b, self.a)) % 360.0

    def as_array(self):
        return np.array([self.L, self.a, self.b])


@dataclass(frozen=True)
class ViewingCondition:
    """Illuminant and observer tables aligned on the spectral grid."""

    illuminant: np.ndarray
    observer: np.ndarray  # shape (36, 3): xbar, ybar, zbar
    name: str = "custom"
    # k * sum(I * ybar) == 100, cached at construction
    _norm: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        illum = np.asarray(self.illuminant, dtype=np.float64)
        obs = np.asarray(self.observer, dtype=np.float64)
        if illum.shape != (N_SAMPLES,):
            raise ValueError("illuminant grid does not match the spectral grid")
        if obs.shape != (N_SAMPLES, 3):
            raise ValueError("observer grid does not match the spectral grid")
        illum.flags.writeable = False
        obs.flags.writeable = False
        object.__setattr__(self, "illuminant", illum)
        object.__setattr__(self, "observer", obs)
        object.__setattr__(self, "_norm", 100.0 / float(illum @ obs[:, 1]))

    @property
    def whitepoint(self) -> XYZColor:
        """Tristimulus of the perfect reflector (Y = 100 exactly)."""
        wp = self._norm * (self.illuminant[:, None] * self.observer).sum(axis=0)
        return XYZColor(float(wp[0]), float(wp[1]), float(wp[2]))


@lru_cache(maxsize=1)
def d50_2deg() -> ViewingCondition:
    """Default viewing condition: illuminant D50, CIE 1931 2° observer."""
    (illum,) = _load_table("illuminant_d50_10nm.csv", ["value"])
    xbar, ybar, zbar = _load_table("cie_1931_2deg_10nm.csv", ["xbar", "ybar", "zbar"])
    return ViewingCondition(illum, np.stack([xbar, ybar, zbar], axis=1), name="D50/2deg")


# ---------------------------------------------------------------------------
# array kernels (used in bulk by the gamut and halftone modules)
# ---------------------------------------------------------------------------

def spectra_to_xyz_array(spectra, vc: ViewingCondition) -> np.ndarray:
    """Tristimulus of reflectance spectra, shape (..., 36) -> (..., 3)."""
    spectra = np.asarray(spectra, dtype=np.float64)
    weighted = vc.illuminant[:, None] * vc.observer  # (36, 3)
    return vc._norm * (spectra @ weighted)


def xyz_to_lab_array(xyz, vc: ViewingCondition) -> np.ndarray:
    """CIE 1976 L*a*b* of tristimulus arrays, shape (..., 3) -> (..., 3)."""
    xyz = np.asarray(xyz, dtype=np.float64)
    wp = vc.whitepoint.as_array()
    t = xyz / wp
    f = np.where(t > _LAB_EPSILON, np.cbrt(np.maximum(t, 0.0)), (_LAB_KAPPA * t + 16.0) / 116.0)
    out = np.empty_like(xyz)
    out[..., 0] = 116.0 * f[..., 1] - 16.0
    out[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    out[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return out


def lab_to_xyz_array(lab, vc: ViewingCondition) -> np.ndarray:
    """Inverse of :func:`xyz_to_lab_array`."""
    lab = np.asarray(lab, dtype=np.float64)
    wp = vc.whitepoint.as_array()
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    f3 = f**3
    t = np.where(f3 > _LAB_EPSILON, f3, (116.0 * f - 16.0) / _LAB_KAPPA)
    return t * wp


def spectra_to_lab_array(spectra, vc: ViewingCondition) -> np.ndarray:
    return xyz_to_lab_array(spectra_to_xyz_array(spectra, vc), vc)


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------

def spectrum_to_xyz(s: ReflectanceSpectrum, vc: ViewingCondition | None = None) -> XYZColor:
    """Integrate a reflectance spectrum to tristimulus values."""
    vc = vc or d50_2deg()
    xyz = spectra_to_xyz_array(s.values, vc)
    return XYZColor(float(xyz[0]), float(xyz[1]), float(xyz[2]))


def xyz_to_lab(c: XYZColor, vc: ViewingCondition | None = None) -> LabColor:
    vc = vc or d50_2deg()
    lab = xyz_to_lab_array(c.as_array(), vc)
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


def lab_to_xyz(c: LabColor, vc: ViewingCondition | None = None) -> XYZColor:
    vc = vc or d50_2deg()
    xyz = lab_to_xyz_array(c.as_array(), vc)
    return XYZColor(float(max(xyz[0], 0.0)), float(max(xyz[1], 0.0)), float(max(xyz[2], 0.0)))


def spectrum_to_lab(s: ReflectanceSpectrum, vc: ViewingCondition | None = None) -> LabColor:
    return xyz_to_lab(spectrum_to_xyz(s, vc), vc)


def delta_e76(a: LabColor, b: LabColor) -> float:
    """CIE 1976 color difference: Euclidean distance in L*a*b*."""
    return math.sqrt((a.L - b.L) ** 2 + (a.a - b.a) ** 2 + (a.b - b.b) ** 2)


def delta_e2000(a: LabColor, b: LabColor) -> float:
    """CIEDE2000 color difference with unit parametric weights."""
    return float(delta_e2000_array(a.as_array(), b.as_array()))


def delta_e76_array(lab1, lab2) -> np.ndarray:
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    return np.sqrt(((lab1 - lab2) ** 2).sum(axis=-1))


def delta_e2000_array(lab1, lab2) -> np.ndarray:
    """Vectorized CIEDE2000 over (..., 3) Lab arrays.

    Follows the hue-averaging conventions of the standard reference
    implementation (Sharma, Wu & Dalal 2005), verified against the
    published 34-pair dataset.
    """
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    L1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    L2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    C1 = np.hypot(a1, b1)
    C2 = np.hypot(a2, b2)
    Cbar = 0.5 * (C1 + C2)
    c7 = Cbar**7
    G = 0.5 * (1.0 - np.sqrt(c7 / (c7 + 25.0**7)))

    a1p = (1.0 + G) * a1
    a2p = (1.0 + G) * a2
    C1p = np.hypot(a1p, b1)
    C2p = np.hypot(a2p, b2)

    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0
    h1p = np.where((np.abs(a1p) < 1e-300) & (np.abs(b1) < 1e-300), 0.0, h1p)
    h2p = np.where((np.abs(a2p) < 1e-300) & (np.abs(b2) < 1e-300), 0.0, h2p)

    dLp = L2 - L1
    dCp = C2p - C1p

    zero_chroma = C1p * C2p == 0.0
    dhp = h2p - h1p
    dhp = np.where(dhp > 180.0, dhp - 360.0, dhp)
    dhp = np.where(dhp < -180.0, dhp + 360.0, dhp)
    dhp = np.where(zero_chroma, 0.0, dhp)
    dHp = 2.0 * np.sqrt(C1p * C2p) * np.sin(np.radians(dhp) / 2.0)

    Lbp = 0.5 * (L1 + L2)
    Cbp = 0.5 * (C1p + C2p)

    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    hbp = np.where(habs <= 180.0, 0.5 * hsum,
                   np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)))
    hbp = np.where(zero_chroma, hsum, hbp)

    T = (1.0
         - 0.17 * np.cos(np.radians(hbp - 30.0))
         + 0.24 * np.cos(np.radians(2.0 * hbp))
         + 0.32 * np.cos(np.radians(3.0 * hbp + 6.0))
         - 0.20 * np.cos(np.radians(4.0 * hbp - 63.0)))

    Sl = 1.0 + 0.015 * (Lbp - 50.0) ** 2 / np.sqrt(20.0 + (Lbp - 50.0) ** 2)
    Sc = 1.0 + 0.045 * Cbp
    Sh = 1.0 + 0.015 * Cbp * T

    dtheta = 30.0 * np.exp(-(((hbp - 275.0) / 25.0) ** 2))
    cbp7 = Cbp**7
    Rc = 2.0 * np.sqrt(cbp7 / (cbp7 + 25.0**7))
    Rt = -np.sin(np.radians(2.0 * dtheta)) * Rc

    fL = dLp / Sl
    fC = dCp / Sc
    fH = dHp / Sh
    return np.sqrt(fL**2 + fC**2 + fH**2 + Rt * fC * fH)


# pluggable metric registry; a no-separation metric can be slotted in later
METRICS = {
    "de76": delta_e76,
    "de2000": delta_e2000,
}


def resolve_metric(metric):
    """Accept a metric name or a callable and return the callable."""
    if callable(metric):
        return metric
    try:
        return METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown color difference metric {metric!r}; "
                         f"available: {sorted(METRICS)}") from None


# ---------------------------------------------------------------------------
# sRGB preview encoding (display approximation; no chromatic adaptation)
# ---------------------------------------------------------------------------

_XYZ_TO_SRGB = np.array([
    [3.2406, -1.5372, -0.4986],
    [-0.9689, 1.8758, 0.0415],
    [0.0557, -0.2040, 1.0570],
])

_D65_WHITEPOINT = np.array([95.047, 100.0, 108.883])


def xyz_to_srgb8_array(xyz, whitepoint=None) -> np.ndarray:
    """Encode tristimulus (Y up to 100) as 8-bit sRGB, out-of-range clipped.

    Previews pass the viewing condition's whitepoint so the media white
    lands on display white (a per-channel XYZ scaling, display convenience
    only; the colorimetric pipeline itself carries no adaptation).
    """
    xyz = np.asarray(xyz, dtype=np.float64)
    if whitepoint is not None:
        xyz = xyz * (_D65_WHITEPOINT / np.asarray(whitepoint, dtype=np.float64))
    lin = (xyz / 100.0) @ _XYZ_TO_SRGB.T
    lin = np.clip(lin, 0.0, 1.0)
    enc = np.where(lin <= 0.0031308, 12.92 * lin, 1.055 * lin ** (1.0 / 2.4) - 0.055)
    return (np.clip(enc, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def lab_to_srgb_hex(lab: LabColor, vc: ViewingCondition | None = None) -> str:
    vc = vc or d50_2deg()
    wp = vc.whitepoint.as_array()
    rgb = xyz_to_srgb8_array(lab_to_xyz_array(lab.as_array(), vc), whitepoint=wp)
    return "#{:02x}{:02x}{:02x}".format(int(rgb[0]), int(rgb[1]), int(rgb[2]))


def srgb_hex_to_lab(hex_str: str, vc: ViewingCondition | None = None) -> LabColor:
    """Inverse of :func:`lab_to_srgb_hex` (exact up to 8-bit quantization)."""
    vc = vc or d50_2deg()
    s = hex_str.strip().lstrip("#")
    if len(s) != 6:
        raise ValueError(f"expected #rrggbb, got {hex_str!r}")
    enc = np.array([int(s[i:i + 2], 16) for i in (0, 2, 4)], dtype=np.float64) / 255.0
    lin = np.where(enc <= 0.04045, enc / 12.92, ((enc + 0.055) / 1.055) ** 2.4)
    xyz = lin @ np.linalg.inv(_XYZ_TO_SRGB).T * 100.0
    wp = vc.whitepoint.as_array()
    xyz = xyz * (wp / _D65_WHITEPOINT)  # undo the preview white normalization
    lab = xyz_to_lab_array(np.clip(xyz, 0.0, None), vc)
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))
