"""Empirical measures on the torus built from orbits and chord collections.

Probability measures are represented as histograms on a dyadic grid
(``GridMeasure``); weak* proximity is operationalized as total-variation
distance at a fixed resolution, which is exactly computable and bounds the
pairing gap against Lipschitz test functions up to O(1/R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .curves import ClosedCurve, TubularRegion, WholeTorus
from .dynamics import OrbitSegment, SurfaceMap, TorusPoint, orbit, orbit_array
from .geometry import reduce_mod1, torus_distance

__all__ = [
    "GridMeasure",
    "ChordCollection",
    "PeriodicCollection",
    "EmptyCollectionError",
    "ResolutionMismatch",
    "PeriodOverflow",
    "empirical_orbit_measure",
    "empirical_collection_measure",
    "cycle_collection_measure",
    "measure_from_points",
    "find_approximate_chords",
    "eta_periodic_orbits",
    "common_period_collection",
    "tv_distance",
    "pushforward",
    "uniform_measure",
]


class EmptyCollectionError(ValueError):
    """An operation needing at least one orbit received an empty collection."""


class ResolutionMismatch(ValueError):
    """Two grid measures with different resolutions were combined."""


class PeriodOverflow(OverflowError):
    """The least common multiple of the periods exceeds the supported bound."""


MAX_COMMON_PERIOD = 2 ** 20


@dataclass(eq=False)
class GridMeasure:
    """Probability measure on the torus as an R x R histogram.

    Bin (i, j) covers [i/R, (i+1)/R) x [j/R, (j+1)/R); weights are
    normalized to sum to one at construction.
    """

    resolution: int
    weights: np.ndarray

    def __post_init__(self):
        r = int(self.resolution)
        if r < 1 or (r & (r - 1)) != 0:
            raise ValueError("resolution must be a positive power of 2")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (r, r):
            raise ValueError(f"weights must have shape ({r}, {r})")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if total <= 0.0:
            raise ValueError("weights must have positive total mass")
        self.resolution = r
        self.weights = w / total


def uniform_measure(resolution: int = 64) -> GridMeasure:
    r = int(resolution)
    return GridMeasure(r, np.full((r, r), 1.0 / (r * r)))


def measure_from_points(points, resolution: int, weights=None) -> GridMeasure:
    """Histogram measure of a point cloud (equal weights by default)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyCollectionError("cannot build a measure from zero points")
    r = int(resolution)
    ij = np.clip((pts * r).astype(np.int64), 0, r - 1)
    flat = ij[:, 0] * r + ij[:, 1]
    w = np.bincount(flat, weights=weights, minlength=r * r).astype(float)
    return GridMeasure(r, w.reshape(r, r))


def empirical_orbit_measure(segment: OrbitSegment, resolution: int = 64) -> GridMeasure:
    """Mass 1/(k+1) at each of the k+1 orbit points."""
    return measure_from_points(segment.points, resolution)


@dataclass(eq=False)
class ChordCollection:
    """Same-horizon orbits starting on a source curve and ending in a region.

    ``chords`` is a multiset: repeated start points are allowed.
    """

    k: int
    chords: list[OrbitSegment]
    region: TubularRegion | WholeTorus
    source: ClosedCurve

    def __post_init__(self):
        for seg in self.chords:
            if seg.k != self.k:
                raise ValueError("all chords must share the same horizon k")

    def __len__(self) -> int:
        return len(self.chords)

    @cached_property
    def orbits_array(self) -> np.ndarray:
        """Stacked orbit points, shape (m, k+1, 2)."""
        if not self.chords:
            return np.empty((0, self.k + 1, 2))
        return np.stack([seg.points for seg in self.chords])

    def validate(self, tol: float = 1e-9) -> None:
        """Check the start-on-source and end-in-region invariants."""
        if not self.chords:
            return
        starts = self.orbits_array[:, 0, :]
        ends = self.orbits_array[:, -1, :]
        from .curves import CurveProximity

        prox = CurveProximity(self.source, sample_spacing=0.01)
        if np.any(prox.distance(starts) > tol):
            raise ValueError("a chord does not start on the source curve")
        if not np.all(self.region.contains(ends)):
            raise ValueError("a chord does not end inside the region")


@dataclass(eq=False)
class PeriodicCollection:
    """Orbits that approximately close up after k steps (same k for all).

    ``points`` rows hold the k+1 orbit points of each member; for exactly
    periodic members re-traversed to a common period the rows are tiled
    copies of one cycle rather than re-iterated (re-iterating a chaotic map
    for the full common period would leave the cycle numerically).
    """

    k: int
    points: np.ndarray  # (m, k+1, 2)
    eta: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 3 or pts.shape[1] != self.k + 1 or pts.shape[2] != 2:
            raise ValueError(f"points must have shape (m, {self.k + 1}, 2)")
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)


def _collection_points(collection) -> np.ndarray:
    if isinstance(collection, PeriodicCollection):
        return collection.points
    return collection.orbits_array


def empirical_collection_measure(collection, resolution: int = 64) -> GridMeasure:
    """Arithmetic mean of the member orbit measures."""
    pts = _collection_points(collection)
    if len(pts) == 0:
        raise EmptyCollectionError("collection has no orbits")
    m, kp1, _ = pts.shape
    # every orbit contributes total mass 1/m split evenly over its points
    return measure_from_points(pts.reshape(-1, 2), resolution)


def cycle_collection_measure(collection, resolution: int = 64) -> GridMeasure:
    """Mean of member measures with each orbit weighted over one traversal.

    Unlike :func:`empirical_collection_measure` the closing point of each
    orbit is not double counted, so re-traversing an exactly periodic orbit
    any whole number of times reproduces the measure exactly.
    """
    pts = _collection_points(collection)
    if len(pts) == 0:
        raise EmptyCollectionError("collection has no orbits")
    return measure_from_points(pts[:, :-1, :].reshape(-1, 2), resolution)


def tv_distance(a: GridMeasure, b: GridMeasure) -> float:
    """Total-variation distance, 0.5 * sum |a - b|, in [0, 1]."""
    if a.resolution != b.resolution:
        raise ResolutionMismatch(f"resolutions differ: {a.resolution} vs {b.resolution}")
    return 0.5 * float(np.abs(a.weights - b.weights).sum())


def pushforward(mu: GridMeasure, surface_map: SurfaceMap, mc_samples: int,
                seed: int = 0) -> GridMeasure:
    """Monte-Carlo pushforward with stratified per-bin sampling.

    ``mc_samples`` must be at least R^2 so every occupied bin gets at least
    one sample; the RNG seed is explicit so runs are reproducible.
    """
    r = mu.resolution
    if mc_samples < r * r:
        raise ValueError("mc_samples must be at least resolution^2")
    per_bin = max(1, mc_samples // (r * r))
    rng = np.random.default_rng(seed)
    ii, jj = np.nonzero(mu.weights > 0.0)
    base = np.stack([ii, jj], axis=1).astype(float) / r
    jitter = rng.random((len(base), per_bin, 2)) / r
    samples = (base[:, None, :] + jitter).reshape(-1, 2)
    pushed = surface_map.apply_array(samples)
    w = np.repeat(mu.weights[ii, jj] / per_bin, per_bin)
    return measure_from_points(pushed, r, weights=w)


# ---------------------------------------------------------------------------
# approximate chords and approximate periodic orbits
# ---------------------------------------------------------------------------


def _refine_chord_params(source: ClosedCurve, region, surface_map: SurfaceMap,
                         k: int, params: np.ndarray, half_window: float,
                         tol: float = 1e-10) -> np.ndarray:
    """Golden-section refinement of seed arc parameters.

    Each parameter moves to a local minimizer of the distance from the k-th
    image to the region core within +-half_window along the source arc.
    """
    if isinstance(region, WholeTorus) or len(params) == 0:
        return params

    def end_distance(s):
        pts, _, _ = source.points_at(s)
        img = pts
        for _ in range(k):
            img = surface_map.apply_array(img)
        return region.distance_to_core(img)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo = params - half_window
    hi = params + half_window
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc = end_distance(c)
    fd = end_distance(d)
    while np.max(hi - lo) > tol:
        take_c = fc < fd
        hi = np.where(take_c, d, hi)
        lo = np.where(take_c, lo, c)
        c = hi - invphi * (hi - lo)
        d = lo + invphi * (hi - lo)
        fc = end_distance(c)
        fd = end_distance(d)
    mid = 0.5 * (lo + hi)
    # never let refinement make the endpoint worse than the original seed
    worse = end_distance(mid) > end_distance(params)
    return np.where(worse, params, mid)


def find_approximate_chords(source: ClosedCurve, region, surface_map: SurfaceMap,
                            k: int, samples: int, refine: bool = True) -> ChordCollection:
    """Orbits of horizon k starting on ``source`` and ending inside ``region``.

    Seeds are arc-length equidistributed (deterministic, reproducible);
    every kept seed is refined along the arc to a local minimizer of the
    distance from its k-th image to the region core.  An empty collection
    is a legitimate result.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    params = source.equidistributed_params(samples)
    starts, _, _ = source.points_at(params)
    ends = starts
    for _ in range(k):
        ends = surface_map.apply_array(ends)
    kept = np.asarray(region.contains(ends))
    params = params[kept]
    if refine and not isinstance(region, WholeTorus) and len(params):
        params = _refine_chord_params(source, region, surface_map, k, params,
                                      half_window=source.length / samples)
        starts, _, _ = source.points_at(params)
        traj = orbit_array(surface_map, starts, k)
        inside = region.contains(traj[-1])
        params = params[inside]
    chords = []
    if len(params):
        starts, _, _ = source.points_at(params)
        traj = orbit_array(surface_map, starts, k)  # (k+1, m, 2)
        for j in range(traj.shape[1]):
            chords.append(OrbitSegment(start=TorusPoint(*starts[j]), k=k,
                                       points=traj[:, j, :]))
    return ChordCollection(k=k, chords=chords, region=region, source=source)


def eta_periodic_orbits(surface_map: SurfaceMap, eta: float, k: int,
                        seeds) -> PeriodicCollection:
    """Keep the seeds whose k-th image returns within eta of the start."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    pts = _seeds_to_array(seeds)
    traj = orbit_array(surface_map, pts, k)
    kept = torus_distance(traj[-1], traj[0]) < eta
    return PeriodicCollection(k=k, points=np.transpose(traj[:, kept, :], (1, 0, 2)),
                              eta=float(eta))


def _seeds_to_array(seeds) -> np.ndarray:
    if isinstance(seeds, np.ndarray):
        return seeds.reshape(-1, 2).astype(float)
    out = []
    for s in seeds:
        if isinstance(s, TorusPoint):
            out.append([s.x, s.y])
        else:
            out.append([float(s[0]), float(s[1])])
    return np.asarray(out, dtype=float)


def common_period_collection(orbits: list[OrbitSegment],
                             tol: float = 1e-9) -> PeriodicCollection:
    """Re-traverse verified periodic orbits to their least common period.

    Each input orbit must satisfy d(start, end) < tol.  The output rows tile
    the input cycles, so the one-traversal measure of the collection
    (:func:`cycle_collection_measure`) is preserved exactly.
    """
    if not orbits:
        raise EmptyCollectionError("need at least one periodic orbit")
    common = 1
    for seg in orbits:
        gap = float(torus_distance(seg.points[-1], seg.points[0]))
        if gap >= tol:
            raise ValueError(f"orbit of period {seg.k} fails the periodicity check ({gap:.2e})")
        common = common * seg.k // math.gcd(common, seg.k)
        if common > MAX_COMMON_PERIOD:
            raise PeriodOverflow(f"common period exceeds {MAX_COMMON_PERIOD}")
    rows = np.empty((len(orbits), common + 1, 2))
    for i, seg in enumerate(orbits):
        cycle = seg.points[:-1]
        reps = common // seg.k
        rows[i, :common] = np.tile(cycle, (reps, 1))
        rows[i, common] = seg.points[0]
    return PeriodicCollection(k=common, points=rows)
