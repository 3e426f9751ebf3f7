"""Neugebauer primary enumeration and the Yule-Nielsen forward print model.

A printing system with n ink channels at k colorant levels per pixel has
k^n distinct pixel states (Neugebauer primaries, NPs). A halftone pattern
is characterized by its NP area coverage vector (NPac): convex weights
giving the relative area each primary occupies. Predicted reflectance is
the Yule-Nielsen power-mean of the primaries' reflectances under those
weights, per wavelength:

    R(lambda) = (sum_i w_i * R_i(lambda)^(1/n_yn))^n_yn
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .colorimetry import (
    N_SAMPLES,
    LabColor,
    ReflectanceSpectrum,
    ViewingCondition,
    d50_2deg,
    spectra_to_xyz_array,
    xyz_to_lab_array,
)
from .errors import EnumerationCapError, FileFormatError, InvalidNPacError, ModelMismatchError

#: Above this many primaries, enumeration stays lazy and tables need subsets.
MATERIALIZATION_CAP = 1_000_000

#: NPac ingest: reject if |sum - 1| exceeds this, renormalize otherwise.
WEIGHT_SUM_TOLERANCE = 1e-6

DEFAULT_YN_EXPONENT = 2.0


@dataclass(frozen=True)
class InkSet:
    """Ink channel layout: n channels, k levels per channel (level 0 = no drop)."""

    names: tuple
    levels: int = 2

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 1:
            raise ValueError("an ink set needs at least one channel")
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        if self.levels < 2:
            raise ValueError("levels per channel must be >= 2")

    @property
    def n(self):
        return len(self.names)

    @property
    def k(self):
        return self.levels

    def channel_index(self, name):
        return self.names.index(name)

    def to_dict(self):
        return {"n": self.n, "k": self.k, "names": list(self.names)}

    @classmethod
    def from_dict(cls, d):
        names = tuple(d["names"])
        if "n" in d and d["n"] != len(names):
            raise FileFormatError(f"inkset n={d['n']} disagrees with {len(names)} names")
        return cls(names=names, levels=int(d["k"]))


def np_count(inkset: InkSet) -> int:
    """Number of pixel states: k^n, exact (Python integers do not overflow)."""
    return inkset.k**inkset.n


def encode_drops(drops, inkset: InkSet) -> int:
    """Mixed-radix id of a drop vector, channel 0 least significant."""
    if len(drops) != inkset.n:
        raise ValueError(f"expected {inkset.n} drop counts, got {len(drops)}")
    np_id = 0
    for d in reversed(drops):
        if not 0 <= d < inkset.k:
            raise ValueError(f"drop count {d} outside [0, {inkset.k})")
        np_id = np_id * inkset.k + d
    return np_id


def decode_id(np_id: int, inkset: InkSet) -> tuple:
    """Drop vector of a primary id (inverse of :func:`encode_drops`)."""
    if not 0 <= np_id < np_count(inkset):
        raise ValueError(f"NP id {np_id} outside [0, {np_count(inkset)})")
    drops = []
    for _ in range(inkset.n):
        np_id, d = divmod(np_id, inkset.k)
        drops.append(d)
    return tuple(drops)


def enumerate_nps(inkset: InkSet, cap: int = MATERIALIZATION_CAP):
    """All (id, drops) pairs in id order; id 0 is the blank substrate.

    Returns a list when the state count fits under ``cap``, otherwise a
    lazy iterator (the 268-million-state regime of wide ink sets is never
    materialized).
    """
    count = np_count(inkset)

    def gen() -> Iterator[tuple]:
        for np_id in range(count):
            yield np_id, decode_id(np_id, inkset)

    if count > cap:
        return gen()
    return list(gen())


@dataclass(frozen=True)
class NeugebauerPrimary:
    """One substrate-ink pixel state with its measured reflectance."""

    id: int
    drops: tuple
    spectrum: ReflectanceSpectrum

    def total_drops(self):
        return sum(self.drops)


@dataclass(frozen=True)
class YNParams:
    """Yule-Nielsen correction exponent (1 = plain convex averaging)."""

    n_yn: float = DEFAULT_YN_EXPONENT

    def __post_init__(self):
        if not self.n_yn >= 1.0:
            raise ValueError("Yule-Nielsen exponent must be >= 1")


@dataclass(frozen=True)
class NPac:
    """Sparse convex weight vector over NP ids.

    Ingest normalizes: duplicate ids are merged by summing, and weights
    are renormalized (divide by their sum) when the sum is within 1e-6 of
    one; anything further off is rejected. Stored entries are id-sorted
    with strictly positive weights.
    """

    entries: tuple  # ((np_id, weight), ...) sorted by id

    def __post_init__(self):
        merged: dict = {}
        for np_id, w in self.entries:
            np_id = int(np_id)
            w = float(w)
            if np_id < 0:
                raise InvalidNPacError(f"NP id {np_id} is negative")
            if w <= 0.0:
                raise InvalidNPacError(f"weight {w} for NP {np_id} is not positive")
            merged[np_id] = merged.get(np_id, 0.0) + w
        if not merged:
            raise InvalidNPacError("NPac has no entries")
        total = sum(merged.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise InvalidNPacError(f"weights sum to {total}, outside 1 +/- {WEIGHT_SUM_TOLERANCE}")
        object.__setattr__(
            self, "entries",
            tuple((i, merged[i] / total) for i in sorted(merged)),
        )

    @classmethod
    def from_dict(cls, d) -> "NPac":
        return cls(tuple((int(k), float(v)) for k, v in d.items()))

    @classmethod
    def single(cls, np_id) -> "NPac":
        return cls(((int(np_id), 1.0),))

    def ids(self):
        return tuple(i for i, _ in self.entries)

    def weights(self):
        return np.array([w for _, w in self.entries])

    def weight_of(self, np_id) -> float:
        for i, w in self.entries:
            if i == np_id:
                return w
        return 0.0

    def as_dict(self):
        return {str(i): w for i, w in self.entries}


@dataclass(frozen=True)
class ViolationReport:
    """One structural problem found by :func:`validate_npac`."""

    code: str
    message: str


def validate_npac(entries, inkset: InkSet | None = None) -> list:
    """Check raw (id, weight) data against the NPac contract.

    Accepts a mapping or an iterable of pairs; returns a list of
    violations (empty list means the data is a valid NPac). Never raises
    on bad values.
    """
    if hasattr(entries, "items"):
        pairs = list(entries.items())
    else:
        pairs = list(entries)
    violations = []
    seen = set()
    total = 0.0
    count = np_count(inkset) if inkset is not None else None
    for raw_id, raw_w in pairs:
        try:
            np_id, w = int(raw_id), float(raw_w)
        except (TypeError, ValueError):
            violations.append(ViolationReport("unparseable", f"entry ({raw_id!r}, {raw_w!r}) is not numeric"))
            continue
        if w <= 0.0:
            violations.append(ViolationReport("nonpositive_weight", f"NP {np_id} has weight {w}"))
        if np_id in seen:
            violations.append(ViolationReport("duplicate_id", f"NP id {np_id} appears more than once"))
        seen.add(np_id)
        if np_id < 0 or (count is not None and np_id >= count):
            violations.append(ViolationReport("id_out_of_range", f"NP id {np_id} outside [0, {count})"))
        total += w
    if not pairs:
        violations.append(ViolationReport("empty", "no entries"))
    elif abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
        violations.append(ViolationReport("weight_sum", f"weights sum to {total:.9f}, not 1"))
    return violations


class NPTable:
    """Reflectance spectra of (a subset of) a press's Neugebauer primaries."""

    def __init__(self, inkset: InkSet, spectra: dict, yn: YNParams | None = None):
        self.inkset = inkset
        self.yn = yn or YNParams()
        count = np_count(inkset)
        self._ids = np.array(sorted(spectra), dtype=np.int64)
        if len(self._ids) == 0:
            raise FileFormatError("NP table has no primaries")
        if self._ids[0] < 0 or self._ids[-1] >= count:
            raise FileFormatError("NP table holds ids outside the ink set's range")
        mat = np.stack([np.asarray(spectra[int(i)], dtype=np.float64) for i in self._ids])
        if mat.shape[1] != N_SAMPLES:
            raise FileFormatError(f"NP spectra must have {N_SAMPLES} samples")
        self._matrix = np.clip(mat, 0.0, 1.0)
        self._row_of = {int(i): r for r, i in enumerate(self._ids)}

    @property
    def ids(self):
        return self._ids

    @property
    def matrix(self):
        """Reflectance rows aligned with :attr:`ids`, shape (N, 36)."""
        return self._matrix

    def __len__(self):
        return len(self._ids)

    def __contains__(self, np_id):
        return int(np_id) in self._row_of

    def spectrum_of(self, np_id) -> ReflectanceSpectrum:
        try:
            row = self._row_of[int(np_id)]
        except KeyError:
            raise ModelMismatchError(f"NP id {np_id} not in table") from None
        return ReflectanceSpectrum(self._matrix[row])

    def primary(self, np_id) -> NeugebauerPrimary:
        return NeugebauerPrimary(int(np_id), decode_id(int(np_id), self.inkset),
                                 self.spectrum_of(np_id))

    def rows_for(self, ids) -> np.ndarray:
        try:
            return np.array([self._row_of[int(i)] for i in ids])
        except KeyError as exc:
            raise ModelMismatchError(f"NP id {exc.args[0]} not in table") from None

    def yn_linear_matrix(self, yn: YNParams | None = None) -> np.ndarray:
        """Spectra raised to 1/n_yn; the model is linear in this domain."""
        yn = yn or self.yn
        return self._matrix ** (1.0 / yn.n_yn)

    def total_drops(self) -> np.ndarray:
        """Per-row total drop counts (the MinInk cost of each primary)."""
        k, n = self.inkset.k, self.inkset.n
        ids = self._ids.copy()
        total = np.zeros(len(ids), dtype=np.int64)
        for _ in range(n):
            ids, d = np.divmod(ids, k)
            total += d
        return total

    def to_dict(self):
        return {
            "inkset": self.inkset.to_dict(),
            "yn_exponent": self.yn.n_yn,
            "nps": [
                {
                    "id": int(i),
                    "drops": list(decode_id(int(i), self.inkset)),
                    "spectrum": [round(float(v), 9) for v in self._matrix[r]],
                }
                for r, i in enumerate(self._ids)
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "NPTable":
        try:
            inkset = InkSet.from_dict(d["inkset"])
            yn = YNParams(float(d.get("yn_exponent", DEFAULT_YN_EXPONENT)))
            spectra = {}
            for rec in d["nps"]:
                np_id = int(rec["id"])
                if "drops" in rec and encode_drops(rec["drops"], inkset) != np_id:
                    raise FileFormatError(f"NP {np_id}: drops {rec['drops']} do not encode to the id")
                spectra[np_id] = rec["spectrum"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"malformed NP table: {exc}") from exc
        return cls(inkset, spectra, yn)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "NPTable":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc


def _check_cap(count, cap):
    if count > cap:
        raise EnumerationCapError(
            f"{count} primaries exceed the materialization cap {cap}; request an id subset")


def predict(npac: NPac, table: NPTable, yn: YNParams | None = None) -> ReflectanceSpectrum:
    """Yule-Nielsen convex prediction of a pattern's reflectance."""
    yn = yn or table.yn
    rows = table.rows_for(npac.ids())
    if len(rows) == 1:
        # single-primary patterns reproduce the table entry bit-exactly
        return ReflectanceSpectrum(table.matrix[rows[0]])
    lin = table.matrix[rows] ** (1.0 / yn.n_yn)
    mixed = (npac.weights()[:, None] * lin).sum(axis=0) ** yn.n_yn
    return ReflectanceSpectrum(np.clip(mixed, 0.0, 1.0))


def predict_lab(npac: NPac, table: NPTable, yn: YNParams | None = None,
                vc: ViewingCondition | None = None) -> LabColor:
    """Predicted CIELAB of a pattern (spectral prediction then colorimetry)."""
    vc = vc or d50_2deg()
    spec = predict(npac, table, yn)
    lab = xyz_to_lab_array(spectra_to_xyz_array(spec.values, vc), vc)
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


def predict_many(weight_rows, table_rows_lin, yn: YNParams) -> np.ndarray:
    """Bulk prediction: (M, N) weights x (N, 36) YN-linear rows -> (M, 36) spectra."""
    mixed = weight_rows @ table_rows_lin
    return np.clip(mixed**yn.n_yn, 0.0, 1.0)
