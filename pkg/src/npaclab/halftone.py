"""Direct pattern-control halftoning: realize NPac fields as per-pixel
Neugebauer primary selections.

Selection stacks each pixel's NPac weights into cumulative intervals over
[0, 1) (entries ordered ascending by NP id) and picks the interval that
contains the tiled threshold matrix's normalized value at that pixel.
With a tile-balanced matrix the realized area coverages converge to the
requested weights up to the 1-level quantization bound.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .colorimetry import (
    ViewingCondition,
    d50_2deg,
    spectra_to_xyz_array,
    xyz_to_srgb8_array,
)
from .errors import FileFormatError, ModelMismatchError
from .neugebauer import NPac, NPTable

DEFAULT_LEVELS = 256


@dataclass(frozen=True)
class ThresholdMatrix:
    """Tile-balanced integer threshold matrix with values in [0, levels)."""

    values: np.ndarray
    levels: int

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise ValueError("threshold matrix must be 2-D")
        if self.levels < 2:
            raise ValueError("need at least 2 levels")
        if vals.min() < 0 or vals.max() >= self.levels:
            raise ValueError(f"matrix values must lie in [0, {self.levels})")
        counts = np.bincount(vals.ravel(), minlength=self.levels)
        if counts.max() - counts.min() > 1:
            raise ValueError("matrix is not tile-balanced (level histogram not uniform)")
        vals = vals.astype(np.int32)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def shape(self):
        return self.values.shape

    def normalized(self) -> np.ndarray:
        """Comparison points (v + 0.5) / levels, midpoint rule avoids endpoint bias."""
        return (self.values + 0.5) / self.levels


def bayer_matrix(size: int) -> ThresholdMatrix:
    """Classic dispersed-dot Bayer matrix; size must be a power of two."""
    if size < 1 or size & (size - 1):
        raise ValueError("Bayer size must be a power of two")
    m = np.zeros((1, 1), dtype=np.int64)
    while m.shape[0] < size:
        m = np.block([[4 * m, 4 * m + 2], [4 * m + 3, 4 * m + 1]])
    return ThresholdMatrix(m, levels=size * size)


def _wrapped_gaussian_kernel(h, w, sigma):
    """Toroidal Gaussian energy kernel centered at (0, 0)."""
    dy = np.minimum(np.arange(h), h - np.arange(h))
    dx = np.minimum(np.arange(w), w - np.arange(w))
    return np.exp(-(dy[:, None] ** 2 + dx[None, :] ** 2) / (2.0 * sigma**2))


def blue_noise_matrix(size: int, seed: int = 0, levels: int = DEFAULT_LEVELS,
                      sigma: float = 1.5) -> ThresholdMatrix:
    """Void-and-cluster blue noise matrix, deterministic for a given seed.

    Builds a full pixel ranking (three phases around an optimized seed
    pattern), then quantizes ranks to ``levels`` values. ``size * size``
    must be divisible by ``levels`` so the result is exactly tile-balanced.
    """
    n = size * size
    if n % levels:
        raise ValueError(f"{size}x{size} matrix cannot balance {levels} levels exactly")
    kernel = _wrapped_gaussian_kernel(size, size, sigma)
    kernel_fft = np.fft.rfft2(kernel)
    rng = np.random.default_rng(seed)

    def energy_of(binary):
        return np.fft.irfft2(np.fft.rfft2(binary.astype(float)) * kernel_fft, s=(size, size))

    # seed pattern: ~10% minority pixels, relaxed by void-and-cluster swaps
    m0 = max(1, n // 10)
    pattern = np.zeros((size, size), dtype=bool)
    flat = rng.choice(n, size=m0, replace=False)
    pattern.ravel()[flat] = True
    energy = energy_of(pattern)

    def tightest_cluster(p, e):
        masked = np.where(p, e, -np.inf)
        return np.unravel_index(np.argmax(masked), p.shape)

    def largest_void(p, e):
        masked = np.where(p, np.inf, e)
        return np.unravel_index(np.argmin(masked), p.shape)

    def toggle(p, e, pos, insert):
        p[pos] = insert
        shift = kernel if insert else -kernel
        e += np.roll(np.roll(shift, pos[0], axis=0), pos[1], axis=1)

    for _ in range(n):
        cluster = tightest_cluster(pattern, energy)
        toggle(pattern, energy, cluster, False)
        void = largest_void(pattern, energy)
        if void == cluster:
            toggle(pattern, energy, cluster, True)
            break
        toggle(pattern, energy, void, True)

    rank = np.empty((size, size), dtype=np.int64)

    # phase 1: unwind the seed pattern, ranking its pixels high-to-low
    work = pattern.copy()
    energy = energy_of(work)
    for r in range(m0 - 1, -1, -1):
        pos = tightest_cluster(work, energy)
        toggle(work, energy, pos, False)
        rank[pos] = r

    # phase 2: refill voids until half the pixels are set
    work = pattern.copy()
    energy = energy_of(work)
    for r in range(m0, n // 2):
        pos = largest_void(work, energy)
        toggle(work, energy, pos, True)
        rank[pos] = r

    # phase 3: beyond half, track clusters of the empty minority instead
    holes = ~work
    energy = energy_of(holes)
    for r in range(n // 2, n):
        pos = tightest_cluster(holes, energy)
        toggle(holes, energy, pos, False)
        rank[pos] = r

    return ThresholdMatrix((rank * levels) // n, levels=levels)


def generate_matrix(kind: str, size: int, seed: int = 0,
                    levels: int = DEFAULT_LEVELS) -> ThresholdMatrix:
    """Build a threshold matrix; ``kind`` is 'bayer' or 'blue_noise'."""
    if kind == "bayer":
        return bayer_matrix(size)
    if kind == "blue_noise":
        return blue_noise_matrix(size, seed=seed, levels=levels)
    raise ValueError(f"unknown matrix kind {kind!r}")


class NPacImage:
    """A width x height field of NPacs sharing one id list.

    Stored as a weight plane per participating primary; constant fields
    are the common case and carry a single broadcast plane set.
    """

    def __init__(self, ids, weights):
        self.ids = tuple(int(i) for i in ids)
        if sorted(self.ids) != list(self.ids) or len(set(self.ids)) != len(self.ids):
            raise ValueError("ids must be strictly ascending")
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 3 or w.shape[2] != len(self.ids):
            raise ValueError("weights must have shape (height, width, len(ids))")
        if np.any(w < -1e-9):
            raise ValueError("negative weights")
        sums = w.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise ValueError("per-pixel weights must sum to 1")
        self.weights = w / sums[:, :, None]

    @classmethod
    def constant(cls, npac: NPac, width: int, height: int) -> "NPacImage":
        w = np.broadcast_to(npac.weights(), (height, width, len(npac.entries)))
        return cls(npac.ids(), w)

    @classmethod
    def horizontal_ramp(cls, left: NPac, right: NPac, width: int, height: int) -> "NPacImage":
        """Linear blend between two NPacs across the image width."""
        ids = sorted(set(left.ids()) | set(right.ids()))
        lw = np.array([left.weight_of(i) for i in ids])
        rw = np.array([right.weight_of(i) for i in ids])
        t = np.linspace(0.0, 1.0, width)[None, :, None]
        w = np.broadcast_to((1 - t) * lw + t * rw, (height, width, len(ids))).copy()
        keep = [j for j, i in enumerate(ids) if w[:, :, j].max() > 0]
        return cls([ids[j] for j in keep], w[:, :, keep])

    @property
    def shape(self):
        return self.weights.shape[:2]


@dataclass(frozen=True)
class HalftoneImage:
    """Per-pixel Neugebauer primary ids."""

    pixels: np.ndarray  # (height, width) integer NP ids

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or not np.issubdtype(px.dtype, np.integer):
            raise ValueError("halftone pixels must be a 2-D integer array")
        if px.min() < 0:
            raise ValueError("NP ids must be non-negative")
        px = px.astype(np.int64)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self):
        return self.pixels.shape


def halftone(img: NPacImage, matrix: ThresholdMatrix) -> HalftoneImage:
    """Select one primary per pixel from stacked cumulative weight intervals."""
    height, width = img.shape
    mh, mw = matrix.shape
    tiled = np.tile(matrix.normalized(), ((height + mh - 1) // mh, (width + mw - 1) // mw))
    s = tiled[:height, :width]
    cum = np.cumsum(img.weights, axis=2)
    cum[:, :, -1] = 1.0  # guard against fp undershoot; s < 1 always lands
    sel = (s[:, :, None] >= cum).sum(axis=2)
    ids = np.asarray(img.ids, dtype=np.int64)
    return HalftoneImage(ids[sel])


def measure_coverages(h: HalftoneImage, window=None) -> NPac:
    """Empirical NP frequency histogram over the image (or a sub-window).

    ``window`` is (y0, y1, x0, x1) half-open; None measures everything.
    """
    px = h.pixels if window is None else h.pixels[window[0]:window[1], window[2]:window[3]]
    if px.size == 0:
        raise ValueError("empty measurement window")
    ids, counts = np.unique(px, return_counts=True)
    total = counts.sum()
    return NPac(tuple((int(i), float(c) / total) for i, c in zip(ids, counts)))


def render_preview(h: HalftoneImage, table: NPTable,
                   vc: ViewingCondition | None = None) -> np.ndarray:
    """8-bit sRGB preview of a halftone, one primary color per pixel."""
    vc = vc or d50_2deg()
    present = np.unique(h.pixels)
    missing = [int(i) for i in present if int(i) not in table]
    if missing:
        raise ModelMismatchError(f"halftone references primaries not in table: {missing}")
    lut_rgb = np.zeros((int(present.max()) + 1, 3), dtype=np.uint8)
    xyz = spectra_to_xyz_array(table.matrix[table.rows_for(present)], vc)
    lut_rgb[present] = xyz_to_srgb8_array(xyz, whitepoint=vc.whitepoint.as_array())
    return lut_rgb[h.pixels]


# ---------------------------------------------------------------------------
# raster I/O
# ---------------------------------------------------------------------------

NPHT_MAGIC = b"NPHT"


def write_pgm(path, values: np.ndarray, maxval: int):
    """Binary PGM (P5); 2-byte big-endian samples above maxval 255."""
    values = np.asarray(values)
    if maxval < 1 or maxval > 65535 or values.max() > maxval:
        raise ValueError("values exceed the PGM maxval")
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n{maxval}\n".encode()
    payload = (values.astype(">u2") if maxval > 255 else values.astype(np.uint8)).tobytes()
    with open(path, "wb") as fh:
        fh.write(header + payload)


def read_pgm(path):
    """Read binary PGM written by :func:`write_pgm`; returns (array, maxval)."""
    data = open(path, "rb").read()
    fields, idx = [], 0
    while len(fields) < 4:
        while idx < len(data) and data[idx:idx + 1].isspace():
            idx += 1
        if data[idx:idx + 1] == b"#":
            idx = data.index(b"\n", idx) + 1
            continue
        start = idx
        while idx < len(data) and not data[idx:idx + 1].isspace():
            idx += 1
        fields.append(data[start:idx])
    idx += 1
    if fields[0] != b"P5":
        raise FileFormatError("not a binary PGM (P5) file")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    dtype = ">u2" if maxval > 255 else np.uint8
    arr = np.frombuffer(data[idx:], dtype=dtype, count=width * height)
    return arr.reshape(height, width).astype(np.int64), maxval


def save_halftone(path, h: HalftoneImage, np_total: int):
    """Persist a halftone: PGM when ids fit a byte, NPHT raster otherwise."""
    if np_total <= 256:
        write_pgm(path, h.pixels, maxval=255)
        return
    need = max(1, (int(h.pixels.max()).bit_length() + 7) // 8)
    id_bytes = next(b for b in (1, 2, 4, 8) if b >= need)
    height, width = h.shape
    header = NPHT_MAGIC + struct.pack("<IIB3x", width, height, id_bytes)
    payload = np.ascontiguousarray(h.pixels).astype(f"<u{id_bytes}")
    with open(path, "wb") as fh:
        fh.write(header + payload.tobytes())


def load_halftone(path) -> HalftoneImage:
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == NPHT_MAGIC:
            width, height, id_bytes = struct.unpack("<IIB3x", fh.read(12))
            arr = np.frombuffer(fh.read(), dtype=f"<u{id_bytes}", count=width * height)
            return HalftoneImage(arr.reshape(height, width).astype(np.int64))
    arr, _ = read_pgm(path)
    return HalftoneImage(arr)


def save_matrix_pgm(path, matrix: ThresholdMatrix):
    write_pgm(path, matrix.values, maxval=matrix.levels - 1)


def load_matrix_pgm(path) -> ThresholdMatrix:
    arr, maxval = read_pgm(path)
    return ThresholdMatrix(arr, levels=maxval + 1)


def save_png(path, rgb: np.ndarray):
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")
