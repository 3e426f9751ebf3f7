"""Gamut geometry and model inversion: map target colors to NPacs, find
closest on-surface matches, and spread hue/lightness alternatives.

The Yule-Nielsen model is linear in the 1/n_yn-power reflectance domain,
so the reachable set there is exactly the convex hull of the primaries.
Two derived structures exploit that:

- membership: the primaries' YN-linear spectra, PCA-reduced (up to 6
  dims), hulled; any predicted pattern projects inside by construction.
- surface: tristimulus integration of the YN-linear spectra gives 3-D
  points whose hull boundary is a triangle mesh over primaries; a
  barycentric point on a facet IS an NPac mixing the facet's three
  primaries, which makes surface sampling, closest-match refinement and
  hue/lightness ray casts exact in the model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, Delaunay, QhullError

from .colorimetry import (
    LabColor,
    ViewingCondition,
    d50_2deg,
    delta_e2000_array,
    delta_e76_array,
    resolve_metric,
    spectra_to_lab_array,
    spectra_to_xyz_array,
)
from .errors import DegenerateGamutError, NonConvergenceError, OutOfGamutError
from .neugebauer import InkSet, NPTable, NPac, YNParams

DEFAULT_SURFACE_SPACING = 1.0  # target mean dE76 between neighboring samples
ROUND_TRIP_TOLERANCE = 0.5     # dE2000; separation round trips must beat this
MEMBERSHIP_TOLERANCE = 1e-7


class SeparationObjective(enum.Enum):
    """Secondary criterion for choosing among metameric NPacs."""

    MIN_INK = "min_ink"
    MIN_NP_COUNT = "min_np_count"
    MAX_SUBSTRATE = "max_substrate"


def objective_value(npac: NPac, table: NPTable, objective: SeparationObjective,
                    drop_costs=None) -> float:
    if objective is SeparationObjective.MIN_INK:
        costs = table.total_drops().astype(float) if drop_costs is None else np.asarray(drop_costs, float)
        rows = table.rows_for(npac.ids())
        return float(npac.weights() @ costs[rows])
    if objective is SeparationObjective.MIN_NP_COUNT:
        return float(len(npac.entries))
    if objective is SeparationObjective.MAX_SUBSTRATE:
        return -npac.weight_of(0)
    raise ValueError(f"unknown objective {objective}")


def metamer_select(candidates, table: NPTable, objective: SeparationObjective,
                   drop_costs=None) -> NPac:
    """Argmin of the objective with a deterministic id-lexicographic tie-break."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("metamer selection needs at least one candidate")
    return min(candidates,
               key=lambda c: (objective_value(c, table, objective, drop_costs), c.ids()))


@dataclass(frozen=True)
class SurfaceMatch:
    """A point on the gamut surface: color, pattern, and mesh location."""

    lab: LabColor
    npac: NPac
    facet: int
    bary: tuple
    de: float


@dataclass(frozen=True)
class GridCell:
    hue_offset: float
    lightness_offset: float
    lab: LabColor
    npac: NPac
    facet: int
    bary: tuple
    de_to_target: float


@dataclass(frozen=True)
class AlternativesGrid:
    """Hue x lightness spread of gamut-surface alternatives around a match.

    Cell (0, 0) is the center match; missing (ragged) offsets are listed
    rather than fabricated. There is deliberately no chroma axis: cells
    are maximal-chroma surface points at their hue/lightness.
    """

    target: LabColor
    center: SurfaceMatch
    n_h: int
    n_l: int
    step_h: float
    step_l: float
    cells: dict = field(repr=False)
    ragged: tuple = ()
    metric_name: str = "de2000"

    @property
    def shape(self):
        return (2 * self.n_h + 1, 2 * self.n_l + 1)


class GamutModel:
    """Immutable gamut geometry built from an NP table (see module docs)."""

    def __init__(self, table: NPTable, yn: YNParams | None = None,
                 vc: ViewingCondition | None = None,
                 surface_spacing: float = DEFAULT_SURFACE_SPACING):
        self.table = table
        self.yn = yn or table.yn
        self.vc = vc or d50_2deg()
        self.linear = table.yn_linear_matrix(self.yn)          # (N, 36)
        self.np_labs = spectra_to_lab_array(table.matrix, self.vc)

        if len(table) < 4:
            raise DegenerateGamutError(
                f"{len(table)} primaries cannot span a color volume (need >= 4)")

        # membership hull in PCA-reduced YN-linear spectral space
        center = self.linear.mean(axis=0)
        _, svals, vt = np.linalg.svd(self.linear - center, full_matrices=False)
        rank = int((svals > 1e-9 * svals[0]).sum())
        dims = min(6, rank)
        if dims < 3:
            raise DegenerateGamutError(
                f"primary spectra span only {dims} dimensions; gamut is degenerate")
        self._pca_center = center
        self._pca_basis = vt[:dims]                             # (d, 36)
        coords = (self.linear - center) @ self._pca_basis.T
        try:
            self._member_hull = ConvexHull(coords)
        except QhullError as exc:
            raise DegenerateGamutError(f"membership hull failed: {exc}") from exc
        self._member_coords = coords

        # 3-D surface mesh: tristimulus of the YN-linear spectra
        self.q_points = spectra_to_xyz_array(self.linear, self.vc)  # (N, 3)
        try:
            self._hull3 = ConvexHull(self.q_points)
            self._delaunay3 = Delaunay(self.q_points)
        except QhullError as exc:
            raise DegenerateGamutError(
                f"primaries are colorimetrically coplanar: {exc}") from exc
        self.facets = self._hull3.simplices.copy()              # (F, 3) rows into table
        self._sample_surface(surface_spacing)

    # -- forward evaluation of barycentric points -----------------------

    def lab_of_weights(self, rows, weights) -> np.ndarray:
        """True Lab of patterns mixing table rows; weights (..., len(rows))."""
        lin = np.asarray(weights) @ self.linear[rows]
        spectra = np.clip(lin, 0.0, 1.0) ** self.yn.n_yn
        return spectra_to_lab_array(spectra, self.vc)

    def npac_of(self, rows, weights) -> NPac:
        ids = self.table.ids[rows]
        entries = [(int(i), float(w)) for i, w in zip(ids, weights) if w > 1e-12]
        return NPac(tuple(entries))

    def _facet_lab(self, facet: int, bary) -> np.ndarray:
        return self.lab_of_weights(self.facets[facet], np.asarray(bary))

    def match_at(self, facet: int, bary, target: LabColor | None = None,
                 metric=None) -> SurfaceMatch:
        bary = np.clip(np.asarray(bary, float), 0.0, 1.0)
        bary = bary / bary.sum()
        lab_arr = self._facet_lab(facet, bary)
        lab = LabColor(*map(float, lab_arr))
        de = 0.0
        if target is not None:
            fn = resolve_metric(metric or "de2000")
            de = float(fn(lab, target))
        return SurfaceMatch(lab=lab, npac=self.npac_of(self.facets[facet], bary),
                            facet=facet, bary=tuple(map(float, bary)), de=de)

    # -- membership ------------------------------------------------------

    def contains_linear(self, lin_points, tol: float = MEMBERSHIP_TOLERANCE):
        """Point-in-hull test in the YN-linear space; (..., 36) -> bool array."""
        pts = np.asarray(lin_points, dtype=np.float64)
        coords = (pts - self._pca_center) @ self._pca_basis.T
        eqs = self._member_hull.equations
        dist = coords @ eqs[:, :-1].T + eqs[:, -1]
        return (dist <= tol).all(axis=-1)

    def contains_npac(self, npac: NPac, tol: float = MEMBERSHIP_TOLERANCE) -> bool:
        rows = self.table.rows_for(npac.ids())
        return bool(self.contains_linear(npac.weights() @ self.linear[rows], tol))

    def hull_volume(self) -> float:
        return float(self._hull3.volume)

    # -- surface sampling --------------------------------------------------

    def _sample_surface(self, spacing: float):
        all_bary, all_facet = [], []
        vert_labs = self.np_labs
        for f, tri in enumerate(self.facets):
            labs = vert_labs[tri]
            edge = max(np.linalg.norm(labs[0] - labs[1]),
                       np.linalg.norm(labs[1] - labs[2]),
                       np.linalg.norm(labs[0] - labs[2]))
            m = max(1, math.ceil(edge / spacing))
            i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
            keep = (i + j) <= m
            b0 = i[keep] / m
            b1 = j[keep] / m
            bary = np.stack([b0, b1, 1.0 - b0 - b1], axis=1)
            all_bary.append(bary)
            all_facet.append(np.full(len(bary), f, dtype=np.int32))
        bary = np.concatenate(all_bary)
        facet = np.concatenate(all_facet)
        # (S, 3) barycentrics against (S, 3, 36) facet-vertex spectra
        lin = (bary[:, :, None] * self.linear[self.facets[facet]]).sum(axis=1)
        spectra = np.clip(lin, 0.0, 1.0) ** self.yn.n_yn
        self.sample_bary = bary
        self.sample_facet = facet
        self.sample_lab = spectra_to_lab_array(spectra, self.vc)

    # -- export ------------------------------------------------------------

    def to_mesh_dict(self) -> dict:
        used = sorted(set(self.facets.ravel().tolist()))
        remap = {row: i for i, row in enumerate(used)}
        return {
            "vertices": [
                {"lab": [round(float(v), 4) for v in self.np_labs[row]],
                 "np_id": int(self.table.ids[row])}
                for row in used
            ],
            "facets": [[remap[int(a)], remap[int(b)], remap[int(c)]]
                       for a, b, c in self.facets],
        }


def build_gamut(table: NPTable, yn: YNParams | None = None,
                vc: ViewingCondition | None = None,
                surface_spacing: float = DEFAULT_SURFACE_SPACING) -> GamutModel:
    """Construct the gamut geometry for an NP table."""
    return GamutModel(table, yn, vc, surface_spacing)


# ---------------------------------------------------------------------------
# closest surface match
# ---------------------------------------------------------------------------

def _metric_to_samples(gamut: GamutModel, target: LabColor, metric):
    t = target.as_array()
    if metric in (None, "de2000"):
        return delta_e2000_array(gamut.sample_lab, t[None, :])
    if metric == "de76":
        return delta_e76_array(gamut.sample_lab, t[None, :])
    fn = resolve_metric(metric)
    return np.array([fn(LabColor(*lab), target) for lab in gamut.sample_lab])


def _refine_on_facet(gamut: GamutModel, facet: int, bary0, target: LabColor, metric):
    """Minimize the metric over one facet's barycentric coordinates."""
    fn = resolve_metric(metric or "de2000")
    tri = gamut.facets[facet]

    def full_bary(x):
        b = np.array([x[0], x[1], 1.0 - x[0] - x[1]])
        return np.clip(b, 0.0, None) / np.clip(b, 0.0, None).sum()

    def cost(x):
        lab = gamut.lab_of_weights(tri, full_bary(x))
        penalty = 1e3 * (max(0.0, -x[0]) + max(0.0, -x[1]) + max(0.0, x[0] + x[1] - 1.0))
        return fn(LabColor(*lab), target) + penalty

    res = minimize(cost, x0=np.asarray(bary0[:2]), method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 400})
    bary = full_bary(res.x)
    return gamut.match_at(facet, bary, target, metric)


def closest_on_gamut(target: LabColor, gamut: GamutModel, metric=None) -> SurfaceMatch:
    """Best on-surface match under the metric: dense-sample argmin, then
    local refinement on the owning facets of the top candidates."""
    de = _metric_to_samples(gamut, target, metric)
    order = np.argsort(de)[:8]
    tried, best = set(), None
    for idx in order:
        f = int(gamut.sample_facet[idx])
        if f in tried:
            continue
        tried.add(f)
        cand = _refine_on_facet(gamut, f, np.asarray(gamut.sample_bary[idx]), target, metric)
        if best is None or cand.de < best.de:
            best = cand
        if len(tried) >= 4:
            break
    return best


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

def _weights_at_q(gamut: GamutModel, q) -> tuple:
    """Locate q in the 3-D triangulation; returns (rows, weights) or None."""
    simplex = int(gamut._delaunay3.find_simplex(q))
    if simplex < 0:
        return None
    trans = gamut._delaunay3.transform[simplex]
    b = trans[:3] @ (np.asarray(q) - trans[3])
    bary = np.append(b, 1.0 - b.sum())
    bary = np.clip(bary, 0.0, None)
    bary /= bary.sum()
    rows = gamut._delaunay3.simplices[simplex]
    return rows, bary


def _lab_at_q(gamut: GamutModel, q):
    located = _weights_at_q(gamut, q)
    if located is None:
        return None, None
    rows, bary = located
    return gamut.lab_of_weights(rows, bary), located


def _pull_inside(gamut: GamutModel, q_from, q_to):
    """Largest step from q_from toward q_to that stays in the triangulation."""
    lo, hi = 0.0, 1.0
    if gamut._delaunay3.find_simplex(q_to) >= 0:
        return q_to
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if gamut._delaunay3.find_simplex(q_from + mid * (q_to - q_from)) >= 0:
            lo = mid
        else:
            hi = mid
    return q_from + lo * (q_to - q_from)


def _enumerate_metamers(gamut: GamutModel, q, target: LabColor, max_neighbors=14,
                        tol: float = 0.1):
    """Candidate NPacs reproducing the target: barycentric solutions of q in
    simplices drawn from nearby primaries, each refined in full color space."""
    dist = np.linalg.norm(gamut.q_points - q, axis=1)
    near = np.argsort(dist)[:max_neighbors]
    target_arr = target.as_array()
    candidates = []
    seen = set()

    from itertools import combinations

    for size in (1, 2, 3, 4):
        for combo in combinations(near.tolist(), size):
            verts = gamut.q_points[list(combo)]
            # least-squares barycentric solve with convexity constraints
            A = np.vstack([verts.T, np.ones(size)])
            rhs = np.append(q, 1.0)
            w, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if np.any(w < -1e-9):
                continue
            w = np.clip(w, 0.0, None)
            s = w.sum()
            if s <= 0:
                continue
            w /= s
            if np.linalg.norm(verts.T @ w - q) > 1e-6 * (1 + np.linalg.norm(q)):
                continue
            rows = tuple(sorted(combo))
            refined = _refine_candidate(gamut, list(combo), w, target_arr)
            if refined is None:
                continue
            w_ref, de = refined
            key = (rows, tuple(np.round(w_ref, 6)))
            if key in seen or de > tol:
                continue
            seen.add(key)
            candidates.append(gamut.npac_of(np.array(combo), w_ref))
    return candidates


def _refine_candidate(gamut: GamutModel, rows, w0, target_arr, iters=25):
    """Gauss-Newton on the simplex weights until the true Lab hits the target."""
    rows = np.asarray(rows)
    w = np.asarray(w0, dtype=float)
    size = len(rows)
    best = None
    for _ in range(iters):
        lab = gamut.lab_of_weights(rows, w)
        de = float(delta_e2000_array(lab, target_arr))
        if best is None or de < best[1]:
            best = (w.copy(), de)
        if de < 1e-4:
            break
        if size == 1:
            break
        # finite-difference Jacobian in the (size-1)-dim simplex tangent
        h = 1e-5
        J = np.zeros((3, size - 1))
        for j in range(size - 1):
            wp = w.copy()
            wp[j] += h
            wp[-1] -= h
            if wp[-1] < -1e-9 or wp[j] > 1 + 1e-9:
                wp = w.copy()
                wp[j] -= h
                wp[-1] += h
                J[:, j] = (lab - gamut.lab_of_weights(rows, np.clip(wp, 0, None) / np.clip(wp, 0, None).sum())) / h
            else:
                J[:, j] = (gamut.lab_of_weights(rows, wp) - lab) / h
        try:
            step, *_ = np.linalg.lstsq(J, target_arr - lab, rcond=None)
        except np.linalg.LinAlgError:
            break
        moved = False
        for damp in (1.0, 0.5, 0.25, 0.1):
            w_try = w.copy()
            w_try[:-1] += damp * step
            w_try[-1] = 1.0 - w_try[:-1].sum()
            if np.any(w_try < -1e-12):
                continue
            w_try = np.clip(w_try, 0.0, None)
            w_try /= w_try.sum()
            lab_try = gamut.lab_of_weights(rows, w_try)
            if float(delta_e2000_array(lab_try, target_arr)) < de:
                w = w_try
                moved = True
                break
        if not moved:
            break
    return best


def invert(target: LabColor, gamut: GamutModel,
           objective: SeparationObjective = SeparationObjective.MIN_INK,
           max_iters: int = 60, tol: float = ROUND_TRIP_TOLERANCE,
           drop_costs=None) -> NPac:
    """Find an NPac whose predicted color matches the target.

    Newton iteration on the 3-D linear-colorimetry coordinate: locate the
    coordinate in the primaries' triangulation, evaluate the true color of
    the barycentric pattern, and correct until the color lands on the
    target. Raises OutOfGamutError (with the closest surface match
    attached) for unreachable targets and NonConvergenceError if the
    solver misses an interior target at the iteration cap.
    """
    target_arr = target.as_array()

    # seed: best of centroid / primaries / surface cache
    seeds = [gamut.q_points.mean(axis=0)]
    np_de = delta_e2000_array(gamut.np_labs, target_arr[None, :])
    seeds.append(gamut.q_points[int(np.argmin(np_de))])
    samp_de = delta_e2000_array(gamut.sample_lab, target_arr[None, :])
    s_idx = int(np.argmin(samp_de))
    bary = gamut.sample_bary[s_idx]
    seeds.append(bary @ gamut.q_points[gamut.facets[gamut.sample_facet[s_idx]]])

    best_q, best_de, best_located = None, np.inf, None
    for q0 in seeds:
        q = _pull_inside(gamut, gamut.q_points.mean(axis=0), np.asarray(q0, float))
        for _ in range(max_iters):
            lab, located = _lab_at_q(gamut, q)
            if lab is None:
                break
            de = float(delta_e2000_array(lab, target_arr))
            if de < best_de:
                best_q, best_de, best_located = q.copy(), de, located
            if de < 1e-3:
                break
            # finite-difference Jacobian d(Lab)/d(q)
            h = 1e-3 * max(1.0, np.abs(q).max())
            J = np.zeros((3, 3))
            for j in range(3):
                qp = q.copy()
                qp[j] += h
                lab_p, _ = _lab_at_q(gamut, qp)
                if lab_p is None:
                    qp[j] -= 2 * h
                    lab_m, _ = _lab_at_q(gamut, qp)
                    if lab_m is None:
                        J[:, j] = 0.0
                        continue
                    J[:, j] = (lab - lab_m) / h
                else:
                    J[:, j] = (lab_p - lab) / h
            try:
                step, *_ = np.linalg.lstsq(J, target_arr - lab, rcond=None)
            except np.linalg.LinAlgError:
                break
            improved = False
            for damp in (1.0, 0.5, 0.25, 0.1, 0.05):
                q_try = _pull_inside(gamut, q, q + damp * step)
                lab_try, _ = _lab_at_q(gamut, q_try)
                if lab_try is None:
                    continue
                if float(delta_e2000_array(lab_try, target_arr)) < de:
                    q = q_try
                    improved = True
                    break
            if not improved:
                break
        if best_de < 1e-3:
            break

    if best_de <= tol and best_located is not None:
        rows, bary = best_located
        candidates = [gamut.npac_of(rows, bary)]
        candidates.extend(_enumerate_metamers(gamut, best_q, target))
        # keep only candidates that actually reproduce the target
        kept = []
        for c in candidates:
            lab = gamut.lab_of_weights(gamut.table.rows_for(c.ids()), c.weights())
            if float(delta_e2000_array(lab, target_arr)) <= tol:
                kept.append(c)
        if kept:
            return metamer_select(kept, gamut.table, objective, drop_costs)

    closest = closest_on_gamut(target, gamut)
    if closest.de > tol:
        raise OutOfGamutError(
            f"target Lab({target.L:.2f}, {target.a:.2f}, {target.b:.2f}) is outside "
            f"the gamut (closest surface match {closest.de:.2f} dE2000 away)",
            closest=closest)
    if closest.de <= tol:
        return closest.npac
    raise NonConvergenceError(
        f"inversion stalled at {best_de:.3f} dE2000 after {max_iters} iterations",
        residuals=[best_de])


# ---------------------------------------------------------------------------
# hue/lightness alternatives
# ---------------------------------------------------------------------------

def _hue_distance(h1, h2):
    d = np.abs(np.asarray(h1) - np.asarray(h2)) % 360.0
    return np.minimum(d, 360.0 - d)


def _surface_point_at(gamut: GamutModel, hue: float, lightness: float):
    """Maximal-chroma surface point at fixed (hue, lightness): the cylinder
    ray cast from the neutral axis, solved per candidate facet."""
    labs = gamut.sample_lab
    L, a, b = labs[:, 0], labs[:, 1], labs[:, 2]
    chroma = np.hypot(a, b)
    hues = np.degrees(np.arctan2(b, a)) % 360.0
    # hue distance scaled to ~dE units at each sample's own chroma
    dh = np.radians(_hue_distance(hues, hue)) * np.maximum(chroma, 1.0)
    dl = np.abs(L - lightness)
    score = np.hypot(dh, dl)
    order = np.argsort(score)[:12]

    best = None
    tried = set()
    for idx in order:
        facet = int(gamut.sample_facet[idx])
        if facet in tried:
            continue
        tried.add(facet)
        sol = _solve_hl_on_facet(gamut, facet, gamut.sample_bary[idx], hue, lightness)
        if sol is None:
            continue
        match, chroma_val = sol
        if best is None or chroma_val > best[1]:
            best = (match, chroma_val)
        if len(tried) >= 6:
            break
    return None if best is None else best[0]


def _solve_hl_on_facet(gamut: GamutModel, facet: int, bary0, hue, lightness,
                       iters=30):
    """Newton solve of {L(b) = L*, hue(b) = h*} in facet barycentrics."""
    tri = gamut.facets[facet]
    x = np.array(bary0[:2], dtype=float)

    def residual(x):
        b = np.array([x[0], x[1], 1.0 - x[0] - x[1]])
        if np.any(b < -0.15):
            return None, None, None
        bc = np.clip(b, 0.0, None)
        bc /= bc.sum()
        lab = gamut.lab_of_weights(tri, bc)
        ch = math.hypot(lab[1], lab[2])
        h = math.degrees(math.atan2(lab[2], lab[1])) % 360.0
        dh = (h - hue + 180.0) % 360.0 - 180.0
        # scale hue residual into dE-comparable units
        r = np.array([lab[0] - lightness, math.radians(dh) * max(ch, 1.0)])
        return r, lab, ch

    for _ in range(iters):
        r, lab, ch = residual(x)
        if r is None:
            return None
        if np.linalg.norm(r) < 1e-4:
            break
        h_step = 1e-5
        J = np.zeros((2, 2))
        for j in range(2):
            xp = x.copy()
            xp[j] += h_step
            rp, _, _ = residual(xp)
            if rp is None:
                xp[j] -= 2 * h_step
                rm, _, _ = residual(xp)
                if rm is None:
                    return None
                J[:, j] = (r - rm) / h_step
            else:
                J[:, j] = (rp - r) / h_step
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        n = np.linalg.norm(step)
        if n > 0.5:
            step *= 0.5 / n
        x = x + step

    r, lab, ch = residual(x)
    if r is None or np.linalg.norm(r) > 0.25:
        return None
    b = np.array([x[0], x[1], 1.0 - x[0] - x[1]])
    if np.any(b < -1e-6):
        return None
    match = gamut.match_at(facet, np.clip(b, 0.0, None))
    return match, ch


def alternatives_grid(target: LabColor, gamut: GamutModel,
                      n_h: int = 3, n_l: int = 3,
                      step_h: float = 4.0, step_l: float = 3.0,
                      metric=None,
                      center: SurfaceMatch | None = None) -> AlternativesGrid:
    """Hue/lightness grid of surface alternatives around the closest match.

    Cells that fall off the gamut surface (no maximal-chroma point exists
    at that hue/lightness) are reported as ragged, not fabricated.
    """
    if n_h < 1 or n_l < 1:
        raise ValueError("n_h and n_l must be >= 1")
    if step_h <= 0 or step_l <= 0:
        raise ValueError("grid steps must be positive")
    metric_name = metric if isinstance(metric, str) else "de2000"
    fn = resolve_metric(metric or "de2000")

    if center is None:
        center = closest_on_gamut(target, gamut, metric)
    c_lab = center.lab
    cells = {}
    ragged = []
    for j in range(-n_l, n_l + 1):
        for i in range(-n_h, n_h + 1):
            if i == 0 and j == 0:
                cells[(0, 0)] = GridCell(0.0, 0.0, center.lab, center.npac,
                                         center.facet, center.bary,
                                         float(fn(center.lab, target)))
                continue
            hue = (c_lab.h + i * step_h) % 360.0
            lightness = c_lab.L + j * step_l
            match = None
            if 0.0 < lightness < 100.0:
                match = _surface_point_at(gamut, hue, lightness)
            if match is None:
                ragged.append((i, j))
                continue
            cells[(i, j)] = GridCell(i * step_h, j * step_l, match.lab, match.npac,
                                     match.facet, match.bary,
                                     float(fn(match.lab, target)))
    return AlternativesGrid(target=target, center=center, n_h=n_h, n_l=n_l,
                            step_h=step_h, step_l=step_l, cells=cells,
                            ragged=tuple(ragged), metric_name=metric_name)


# ---------------------------------------------------------------------------
# independent per-ink coverage patterns (halftone statistics of separate screens)
# ---------------------------------------------------------------------------

def independent_coverage_npac(inkset: InkSet, coverages) -> NPac:
    """NPac of independently screened per-ink coverages (binary inks).

    Overlaps follow product statistics: the weight of a primary is the
    product over channels of (coverage if inked else 1 - coverage).
    """
    if inkset.k != 2:
        raise ValueError("independent-coverage patterns are defined for binary inks")
    cov = np.asarray(coverages, dtype=np.float64)
    if cov.shape != (inkset.n,) or np.any(cov < 0) or np.any(cov > 1):
        raise ValueError("need one coverage in [0, 1] per channel")
    entries = []
    for np_id in range(2**inkset.n):
        w = 1.0
        for ch in range(inkset.n):
            w *= cov[ch] if (np_id >> ch) & 1 else 1.0 - cov[ch]
        if w > 1e-15:
            entries.append((np_id, w))
    return NPac(tuple(entries))
