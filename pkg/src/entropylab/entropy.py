"""Growth-rate estimators: volume growth, separated chords, local stretching.

All exponential growth rates are estimated the same way: build a series
k -> value, take log+ (natural log, with log+ 0 = 0), and fit a
least-squares slope over a window.  The slope together with r^2 stands in
for a limit that finite horizons cannot reach; r^2 makes the estimate
quality auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import (
    ClosedCurve,
    CurveProximity,
    TubularRegion,
    VertexBudgetExceeded,
    evolve,
    evolve_open_path,
    length_in_region,
)
from .dynamics import SurfaceMap, TorusPoint, orbit_array
from .geometry import reduce_mod1, torus_distance
from .measures import ChordCollection

__all__ = [
    "GrowthSeries",
    "EntropyEstimate",
    "InsufficientData",
    "growth_rate",
    "default_window",
    "log_plus",
    "volume_growth_entropy",
    "volume_growth_series",
    "volume_growth_entropy_limit",
    "bowen_distance",
    "separated_chords",
    "separated_chord_entropy",
    "SeparatedChordResult",
    "local_volume_growth",
    "covering_bound_check",
    "CoveringReport",
    "accessibility_check",
    "AccessibilityReport",
]


class InsufficientData(ValueError):
    """Fewer than four positive series values inside the fit window."""


def log_plus(values) -> np.ndarray:
    """Natural log with log+ 0 = 0 (values must be nonnegative)."""
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    pos = v > 0.0
    out[pos] = np.log(v[pos])
    return out


@dataclass(frozen=True)
class GrowthSeries:
    """A sampled growth sequence k -> value with its log+ transform."""

    ks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=int)
        vals = np.asarray(self.values, dtype=float)
        if ks.shape != vals.shape or ks.ndim != 1:
            raise ValueError("ks and values must be matching 1-d arrays")
        if len(ks) and np.any(np.diff(ks) <= 0):
            raise ValueError("ks must be strictly increasing")
        if np.any(vals < 0.0):
            raise ValueError("values must be nonnegative")
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "values", vals)

    @property
    def log_plus(self) -> np.ndarray:
        return log_plus(self.values)

    def __len__(self) -> int:
        return len(self.ks)


@dataclass(frozen=True)
class EntropyEstimate:
    """Fitted exponential growth rate over a window of the series."""

    slope: float
    intercept: float
    window: tuple[int, int]
    r_squared: float
    method: str
    truncated: bool = False

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")


def default_window(series: GrowthSeries, drop_head: int = 3) -> tuple[int, int]:
    """Drop the first ``drop_head`` entries (transient), keep the rest."""
    ks = series.ks
    if len(ks) == 0:
        raise InsufficientData("empty series")
    lo = ks[min(drop_head, len(ks) - 1)]
    return int(lo), int(ks[-1])


def growth_rate(series: GrowthSeries, window: tuple[int, int] | None = None,
                method: str = "growth-rate", truncated: bool = False) -> EntropyEstimate:
    """Least-squares slope of log+ value against k over the window.

    Requires at least four positive values inside the window; zero values
    participate with log+ 0 = 0 per the series convention.
    """
    if window is None:
        window = default_window(series)
    lo, hi = window
    mask = (series.ks >= lo) & (series.ks <= hi)
    ks = series.ks[mask].astype(float)
    vals = series.values[mask]
    if np.count_nonzero(vals > 0.0) < 4:
        raise InsufficientData(
            f"window [{lo}, {hi}] holds {np.count_nonzero(vals > 0.0)} positive values; need 4")
    y = log_plus(vals)
    kbar = ks.mean()
    ybar = y.mean()
    var = float(np.sum((ks - kbar) ** 2))
    slope = float(np.sum((ks - kbar) * (y - ybar)) / var)
    intercept = float(ybar - slope * kbar)
    ss_res = float(np.sum((y - (slope * ks + intercept)) ** 2))
    ss_tot = float(np.sum((y - ybar) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return EntropyEstimate(slope=slope, intercept=intercept, window=(int(lo), int(hi)),
                           r_squared=r2, method=method, truncated=truncated)


# ---------------------------------------------------------------------------
# volume growth
# ---------------------------------------------------------------------------


def _evolve_series(surface_map, l0, k_max, max_sag, vertex_budget):
    """Evolve, tolerating budget truncation; returns (curves, truncated)."""
    try:
        return evolve(l0, surface_map, k_max, max_sag, vertex_budget=vertex_budget), False
    except VertexBudgetExceeded as err:
        if len(err.partial) == 0:
            raise
        return err.partial, True


def volume_growth_series(surface_map: SurfaceMap, l0: ClosedCurve, region,
                         k_max: int, max_sag: float, vertex_budget: int = 2 ** 24,
                         curves: list[ClosedCurve] | None = None) -> GrowthSeries:
    """The sequence k -> length of L_k inside the region."""
    if curves is None:
        curves, _ = _evolve_series(surface_map, l0, k_max, max_sag, vertex_budget)
    return GrowthSeries(
        np.arange(1, len(curves) + 1),
        np.array([length_in_region(c, region) for c in curves]),
    )


def volume_growth_entropy(surface_map: SurfaceMap, l0: ClosedCurve, region,
                          k_max: int, max_sag: float,
                          window: tuple[int, int] | None = None,
                          vertex_budget: int = 2 ** 24,
                          curves: list[ClosedCurve] | None = None) -> EntropyEstimate:
    """Growth rate of the curve length inside a fixed region.

    ``curves`` may carry a precomputed evolution to share across regions.
    On vertex-budget truncation the estimate is fitted on the completed
    prefix and flagged ``truncated``.
    """
    if k_max < 6:
        raise ValueError("k_max must be at least 6")
    truncated = False
    if curves is None:
        curves, truncated = _evolve_series(surface_map, l0, k_max, max_sag, vertex_budget)
    series = volume_growth_series(surface_map, l0, region, k_max, max_sag, curves=curves)
    return growth_rate(series, window, method="volume-growth", truncated=truncated)


def volume_growth_entropy_limit(surface_map: SurfaceMap, l0: ClosedCurve, l: ClosedCurve,
                                etas, k_max: int, max_sag: float,
                                window: tuple[int, int] | None = None,
                                vertex_budget: int = 2 ** 24) -> list[EntropyEstimate]:
    """One estimate per shrinking neighborhood; the limit is their minimum.

    ``etas`` must be strictly decreasing.  The evolution is computed once
    and shared across the schedule.
    """
    etas = list(etas)
    if any(b >= a for a, b in zip(etas, etas[1:])):
        raise ValueError("eta schedule must be strictly decreasing")
    curves, truncated = _evolve_series(surface_map, l0, k_max, max_sag, vertex_budget)
    out = []
    for eta in etas:
        series = volume_growth_series(surface_map, l0, TubularRegion(l, eta),
                                      k_max, max_sag, curves=curves)
        out.append(growth_rate(series, window, method=f"volume-growth-eta={eta}",
                               truncated=truncated))
    return out


# ---------------------------------------------------------------------------
# Bowen metric and separated chords
# ---------------------------------------------------------------------------


def bowen_distance(surface_map: SurfaceMap, x: TorusPoint, y: TorusPoint, k: int) -> float:
    """Dynamical metric: max torus distance along the first k iterates."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    traj = orbit_array(surface_map, np.array([x.as_array(), y.as_array()]), k)
    return float(np.max(torus_distance(traj[:, 0, :], traj[:, 1, :])))


def _bowen_to_many(orbit_one: np.ndarray, orbits: np.ndarray) -> np.ndarray:
    """Bowen distances from one orbit (k+1, 2) to a stack (m, k+1, 2)."""
    delta = np.abs(orbits - orbit_one[None, :, :])
    delta = np.minimum(delta, 1.0 - delta)
    return np.sqrt((delta ** 2).sum(-1)).max(-1)


def _greedy_separated(orbits: np.ndarray, eta: float, order: np.ndarray) -> np.ndarray:
    """Indices of a greedy maximal eta-separated subset, processed in order.

    A candidate conflicts with a kept orbit only if every iterate stays
    within eta, in particular the final iterates; a grid on the final
    position therefore yields a sound candidate superset.
    """
    if len(orbits) == 0:
        return np.empty(0, dtype=int)
    finals = orbits[:, -1, :]
    n_cells = max(1, int(math.floor(1.0 / eta)))
    cell = 1.0 / n_cells
    buckets: dict[tuple[int, int], list[int]] = {}
    kept: list[int] = []
    for i in order:
        ci = int(finals[i, 0] / cell) % n_cells
        cj = int(finals[i, 1] / cell) % n_cells
        cand: list[int] = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                cand.extend(buckets.get(((ci + di) % n_cells, (cj + dj) % n_cells), ()))
        if cand:
            d = _bowen_to_many(orbits[i], orbits[cand])
            if not np.all(d > eta):
                continue
        kept.append(i)
        buckets.setdefault((ci, cj), []).append(i)
    return np.asarray(kept, dtype=int)


def separated_chords(collection: ChordCollection, eta: float,
                     reverse_order: bool = False) -> ChordCollection:
    """Greedy maximal sub-multiset with pairwise Bowen distance above eta.

    Chords are processed in canonical seed order (reversed when asked, as an
    order-sensitivity diagnostic); a chord is kept iff its Bowen distance to
    every kept chord exceeds eta.  The output is maximal: every rejected
    chord is within eta of some kept chord.
    """
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    orbits = collection.orbits_array
    order = np.arange(len(orbits))
    if reverse_order:
        order = order[::-1]
    kept = np.sort(_greedy_separated(orbits, eta, order))
    return ChordCollection(k=collection.k,
                           chords=[collection.chords[i] for i in kept],
                           region=collection.region, source=collection.source)


@dataclass(frozen=True)
class SeparatedChordResult:
    """Separated-count series, fit, and the order-sensitivity diagnostic."""

    estimate: EntropyEstimate
    series: GrowthSeries
    reversed_counts: np.ndarray
    saturation_cap: int


def separated_chord_entropy(surface_map: SurfaceMap, l0: ClosedCurve, region,
                            eta: float, ks, samples: int,
                            window: tuple[int, int] | None = None) -> SeparatedChordResult:
    """Growth rate of maximal separated-chord counts (a lower-bound estimator).

    Seeds are shared across horizons.  Undersampling can only lower the
    counts, so the estimate keeps its lower-bound meaning at any sample
    budget; horizons whose counts approach the seed budget (above 1/4 of
    it) are dropped from the default window as saturated.
    """
    ks = np.asarray(sorted(int(k) for k in ks), dtype=int)
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    params = l0.equidistributed_params(samples)
    starts, _, _ = l0.points_at(params)
    traj = orbit_array(surface_map, starts, int(ks[-1]))  # (kmax+1, m, 2)
    counts = np.zeros(len(ks), dtype=int)
    counts_rev = np.zeros(len(ks), dtype=int)
    for idx, k in enumerate(ks):
        rows = np.nonzero(np.asarray(region.contains(traj[k])))[0]
        orbits = np.ascontiguousarray(np.transpose(traj[: k + 1, rows, :], (1, 0, 2)))
        counts[idx] = len(_greedy_separated(orbits, eta, np.arange(len(rows))))
        counts_rev[idx] = len(_greedy_separated(orbits, eta, np.arange(len(rows))[::-1]))
    series = GrowthSeries(ks, counts.astype(float))
    cap = max(1, samples // 16)
    if window is None:
        lo, hi = default_window(series)
        unsaturated = series.ks[series.values <= cap]
        if len(unsaturated):
            hi = min(hi, int(unsaturated[-1]))
        # keep at least four points even if saturation shrank the window
        lo = min(lo, max(int(series.ks[0]), hi - 3))
        window = (lo, hi)
    estimate = growth_rate(series, window, method=f"separated-chords-eta={eta}")
    return SeparatedChordResult(estimate=estimate, series=series,
                                reversed_counts=counts_rev, saturation_cap=cap)


# ---------------------------------------------------------------------------
# local volume growth and the covering bound
# ---------------------------------------------------------------------------


def _cyclic_runs(inside: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True in a cyclic boolean array, as (start, end) incl."""
    n = len(inside)
    idx = np.nonzero(inside)[0]
    if len(idx) == 0:
        return []
    if len(idx) == n:
        return [(0, n - 1)]
    rot = int(np.argmin(inside))  # index of some False entry
    r = np.roll(inside, -rot)
    ridx = np.nonzero(r)[0]
    breaks = np.nonzero(np.diff(ridx) > 1)[0]
    starts = np.concatenate([[ridx[0]], ridx[breaks + 1]])
    ends = np.concatenate([ridx[breaks], [ridx[-1]]])
    return [(int((s + rot) % n), int((e + rot) % n)) for s, e in zip(starts, ends)]


class _BowenBallClipper:
    """Clips a curve against Bowen balls, sharing probe orbits across calls."""

    def __init__(self, surface_map: SurfaceMap, l0: ClosedCurve, k: int, n_probe: int):
        self.surface_map = surface_map
        self.l0 = l0
        self.k = int(k)
        self.params = np.arange(n_probe) * (l0.length / n_probe)
        starts, _, _ = l0.points_at(self.params)
        self.traj = orbit_array(surface_map, starts, self.k)  # (k+1, m, 2)
        self.step = l0.length / n_probe

    def _dk_profile(self, center_orbit: np.ndarray) -> np.ndarray:
        delta = np.abs(self.traj - center_orbit[:, None, :])
        delta = np.minimum(delta, 1.0 - delta)
        return np.sqrt((delta ** 2).sum(-1)).max(0)

    def _dk_at(self, s: float, center_orbit: np.ndarray) -> float:
        pts, _, _ = self.l0.points_at(np.atleast_1d(s))
        tr = orbit_array(self.surface_map, pts, self.k)
        dd = np.abs(tr[:, 0, :] - center_orbit)
        dd = np.minimum(dd, 1.0 - dd)
        return float(np.sqrt((dd ** 2).sum(-1)).max())

    def _refine(self, s_in: float, s_out: float, eta: float, center) -> float:
        lo, hi = s_in, s_out
        for _ in range(60):
            if abs(hi - lo) < 1e-11:
                break
            mid = 0.5 * (lo + hi)
            if self._dk_at(mid, center) <= eta:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def arcs(self, center_orbit: np.ndarray, eta: float,
             center_param: float | None = None) -> list[tuple[float, float]]:
        """Arc-parameter intervals of the ball (s_hi may exceed the length)."""
        length = self.l0.length
        inside = self._dk_profile(center_orbit) <= eta
        if inside.all():
            return [(0.0, length)]
        if not inside.any():
            # ball smaller than the probe spacing: grow from the center seed
            if center_param is None:
                return []
            s_c = float(center_param)
            if self._dk_at(s_c, center_orbit) > eta:
                return []
            lo = self._refine(s_c, s_c - self.step, eta, center_orbit)
            hi = self._refine(s_c, s_c + self.step, eta, center_orbit)
            return [(lo, hi)] if hi > lo else []
        out = []
        for i0, i1 in _cyclic_runs(inside):
            s_lo = self._refine(self.params[i0], self.params[i0] - self.step, eta, center_orbit)
            s_hi_anchor = self.params[i1] if i1 >= i0 else self.params[i1] + length
            s_hi = self._refine(s_hi_anchor, s_hi_anchor + self.step, eta, center_orbit)
            if s_hi > s_lo:
                out.append((s_lo, s_hi))
        return out


def _image_length_of_arcs(surface_map, l0: ClosedCurve, arcs, k: int, max_sag: float,
                          sample_spacing: float | None = None) -> float:
    """Total length of the k-th image of the given arc-parameter intervals."""
    if sample_spacing is None:
        sample_spacing = max(l0.length / 4096.0, 1e-9)
    total = 0.0
    hom = np.asarray(l0.homology_class, dtype=float)
    length = l0.length
    vertex_params = l0.prefix_lengths[:-1]
    for s_lo, s_hi in arcs:
        if s_hi <= s_lo:
            continue
        n = max(2, int(math.ceil((s_hi - s_lo) / sample_spacing)) + 1)
        base = np.linspace(s_lo, s_hi, n)
        # include curve vertices inside the window so corners are not cut
        w_lo = math.floor(s_lo / length)
        w_hi = math.floor(s_hi / length)
        verts = np.concatenate([vertex_params + w * length for w in range(w_lo, w_hi + 1)])
        verts = verts[(verts > s_lo) & (verts < s_hi)]
        ss = np.unique(np.concatenate([base, verts]))
        wraps = np.floor_divide(ss, length)
        path = l0.lifted_points_at(np.mod(ss, length)) + wraps[:, None] * hom
        images = evolve_open_path(surface_map, path, k, max_sag)
        total += float(np.sum(np.linalg.norm(np.diff(images[-1], axis=0), axis=1)))
    return total


def local_volume_growth(surface_map: SurfaceMap, l0: ClosedCurve, x: TorusPoint,
                        eta_prime: float, k: int, max_sag: float = 1e-3,
                        n_probe: int = 2048) -> float:
    """Normalized log length of the k-th image of the curve near one point.

    Clips the curve to the Bowen ball of radius ``eta_prime`` around the
    orbit of x (x must lie on the curve), evolves the clipped arcs k steps,
    and returns log+ of the total image length divided by k.
    """
    s_c = _project_param(l0, x.as_array())
    clipper = _BowenBallClipper(surface_map, l0, k, n_probe)
    center = orbit_array(surface_map, x.as_array().reshape(1, 2), k)[:, 0, :]
    arcs = clipper.arcs(center, eta_prime, center_param=s_c)
    total = _image_length_of_arcs(surface_map, l0, arcs, k, max_sag)
    return float(log_plus(np.array([total]))[0]) / k


def _project_param(l0: ClosedCurve, point: np.ndarray, tol: float = 1e-9) -> float:
    """Arc parameter of a point that lies on the curve (within tol)."""
    prox = CurveProximity(l0, sample_spacing=0.01)
    if float(prox.distance(point.reshape(1, 2))[0]) > tol:
        raise ValueError("point does not lie on the curve")
    m = max(4096, 4 * len(l0))
    params = np.arange(m) * (l0.length / m)
    pts, _, _ = l0.points_at(params)
    d = torus_distance(pts, point)
    j = int(np.argmin(d))
    lo = params[j] - l0.length / m
    hi = params[j] + l0.length / m

    def dist_at(s: float) -> float:
        p, _, _ = l0.points_at(np.atleast_1d(s))
        return float(torus_distance(p, point)[0])

    for _ in range(80):
        if hi - lo < 1e-13:
            break
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if dist_at(m1) < dist_at(m2):
            hi = m2
        else:
            lo = m1
    return float(np.mod(0.5 * (lo + hi), l0.length))


@dataclass(frozen=True)
class CoveringReport:
    """Evaluation of the separated-set covering bound at one configuration."""

    lhs: float
    rhs: float
    ratio: float
    passed: bool
    n_separated: int
    max_local_volume: float
    eta: float
    eta_prime: float
    k: int


def covering_bound_check(surface_map: SurfaceMap, l0: ClosedCurve, region,
                         eta: float, k: int, samples: int = 4096,
                         max_sag: float = 1e-3, slack: float = 0.05) -> CoveringReport:
    """Check length(L_k in U) <= |S_k(eta)| * max local image volume.

    The local volumes use Bowen balls of radius 2*eta around the separated
    chords.  PASS allows a 5% discretization slack.
    """
    eta_prime = 2.0 * eta
    params = l0.equidistributed_params(samples)
    starts, _, _ = l0.points_at(params)
    traj = orbit_array(surface_map, starts, k)
    rows = np.nonzero(np.asarray(region.contains(traj[k])))[0]
    orbits = np.ascontiguousarray(np.transpose(traj[: k + 1, rows, :], (1, 0, 2)))
    kept = _greedy_separated(orbits, eta, np.arange(len(rows)))

    curves, _ = _evolve_series(surface_map, l0, k, max_sag, 2 ** 24)
    lhs = length_in_region(curves[-1], region)
    if len(kept) == 0:
        return CoveringReport(lhs=lhs, rhs=0.0, ratio=math.inf if lhs > 0 else 0.0,
                              passed=lhs == 0.0, n_separated=0, max_local_volume=0.0,
                              eta=eta, eta_prime=eta_prime, k=k)

    clipper = _BowenBallClipper(surface_map, l0, k, n_probe=samples)
    clipper.params = params
    clipper.traj = traj
    clipper.step = l0.length / samples
    max_vol = 0.0
    for row in kept:
        arcs = clipper.arcs(orbits[row], eta_prime, center_param=float(params[rows[row]]))
        vol = _image_length_of_arcs(surface_map, l0, arcs, k, max_sag)
        max_vol = max(max_vol, vol)
    rhs = len(kept) * max_vol
    ratio = lhs / rhs if rhs > 0 else math.inf
    return CoveringReport(lhs=lhs, rhs=rhs, ratio=ratio, passed=lhs <= rhs * (1.0 + slack),
                          n_separated=int(len(kept)), max_local_volume=max_vol,
                          eta=eta, eta_prime=eta_prime, k=k)


# ---------------------------------------------------------------------------
# accessibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AccessibilityReport:
    """Per-stage hit records of the evolving curve entering shrinking tubes."""

    accessible: bool
    stages: tuple[tuple[float, tuple[int, ...]], ...]


def accessibility_check(surface_map: SurfaceMap, l0: ClosedCurve, l: ClosedCurve,
                        etas, k_max: int, max_sag: float = 1e-3,
                        min_hits: int = 2) -> AccessibilityReport:
    """Record all k <= k_max with L_k entering each eta-neighborhood of l.

    Returns accessible = True iff every stage registers at least
    ``min_hits`` hits within the horizon.
    """
    etas = sorted({float(e) for e in etas}, reverse=True)
    curves, _ = _evolve_series(surface_map, l0, k_max, max_sag, 2 ** 24)
    spacing = min(etas) / 4.0
    prox = CurveProximity(l, sample_spacing=spacing)
    min_dist = np.empty(len(curves))
    for i, c in enumerate(curves):
        n_sub = np.maximum(1, np.ceil(c.edge_lengths / spacing).astype(int))
        edge_idx = np.repeat(np.arange(len(c)), n_sub)
        block = np.repeat(np.concatenate([[0], np.cumsum(n_sub)[:-1]]), n_sub)
        t = (np.arange(int(n_sub.sum())) - block) / n_sub[edge_idx]
        pts = c.lifted_vertices[edge_idx] + t[:, None] * c.displacements[edge_idx]
        min_dist[i] = float(prox.distance(reduce_mod1(pts)).min())
    stages = []
    ok = True
    for eta in etas:
        hits = tuple(int(k) for k in (np.nonzero(min_dist <= eta)[0] + 1))
        stages.append((eta, hits))
        if len(hits) < min_hits:
            ok = False
    return AccessibilityReport(accessible=ok, stages=tuple(stages))
