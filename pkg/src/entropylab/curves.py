"""Closed polyline curves on the torus: evolution, clipping, intersections.

A curve is an ordered closed polyline.  Vertices live in the fundamental
domain [0, 1)^2; every edge additionally carries an integer lift increment
so the straight segment connecting consecutive vertices is unambiguous on
the torus.  The lift increments sum to the curve's homology class.

Curves are kept as polylines rather than splines on purpose: clipping,
intersection and area computations then reduce to segment arithmetic,
which stays robust while iterated maps stretch lengths exponentially.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .dynamics import SurfaceMap, TorusPoint
from .geometry import point_segment_distance, reduce_mod1, shoelace_area

__all__ = [
    "ClosedCurve",
    "TubularRegion",
    "WholeTorus",
    "FULL_TORUS",
    "CurveProximity",
    "IntersectionPoint",
    "VertexBudgetExceeded",
    "DegenerateIntersection",
    "evolve",
    "evolve_open_path",
    "curve_length",
    "length_in_region",
    "intersections",
    "signed_area",
    "curve_from_plane",
    "round_circle",
    "flat_circle",
    "stadium",
    "perturb_curve",
    "curve_to_csv",
    "curve_from_csv",
]

#: image edges are split until their lifted extent is at most this, so the
#: nine-translate tests downstream stay valid
MAX_EDGE_EXTENT = 0.25

DEFAULT_VERTEX_BUDGET = 2 ** 24


class VertexBudgetExceeded(RuntimeError):
    """Adaptive refinement would exceed the configured vertex cap.

    ``partial`` holds the curves completed before the failing step so growth
    estimators can still fit on the truncated series.
    """

    def __init__(self, limit: int, step: int, partial: list["ClosedCurve"]):
        super().__init__(f"refinement at step {step} would exceed {limit} vertices")
        self.limit = limit
        self.step = step
        self.partial = partial


class DegenerateIntersection(RuntimeError):
    """Near-tangential or vertex-grazing crossing; perturb the curve and retry."""


@dataclass(eq=False)
class ClosedCurve:
    """Closed polyline on the torus with per-edge integer lift increments.

    Edge ``i`` runs from ``vertices[i]`` to ``vertices[(i+1) % n]``; its
    displacement in the universal cover is
    ``vertices[(i+1) % n] + edge_lifts[i] - vertices[i]``.
    """

    vertices: np.ndarray
    edge_lifts: np.ndarray
    label: str = ""
    generation: int = 0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        c = np.asarray(self.edge_lifts)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("vertices must be an (n, 2) array with n >= 3")
        if c.shape != v.shape:
            raise ValueError("edge_lifts must match vertices in shape")
        if np.any(v < 0.0) or np.any(v >= 1.0):
            raise ValueError("vertices must be reduced into [0, 1)")
        if not np.array_equal(c, np.rint(c)):
            raise ValueError("edge_lifts must be integers")
        self.vertices = v
        self.edge_lifts = c.astype(np.int64)
        if np.any(np.all(self.displacements == 0.0, axis=1)):
            raise ValueError("curve has a zero-length edge")

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def displacements(self) -> np.ndarray:
        nxt = np.roll(self.vertices, -1, axis=0)
        return nxt + self.edge_lifts - self.vertices

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.displacements
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def length(self) -> float:
        return float(self.edge_lengths.sum())

    @cached_property
    def prefix_lengths(self) -> np.ndarray:
        out = np.empty(len(self.vertices) + 1)
        out[0] = 0.0
        np.cumsum(self.edge_lengths, out=out[1:])
        return out

    @cached_property
    def homology_class(self) -> tuple[int, int]:
        s = self.edge_lifts.sum(axis=0)
        return (int(s[0]), int(s[1]))

    @cached_property
    def lifted_vertices(self) -> np.ndarray:
        """Lift of the polyline to R^2, shape (n+1, 2); last = first + class."""
        out = np.empty((len(self.vertices) + 1, 2))
        out[0] = self.vertices[0]
        np.cumsum(self.displacements, axis=0, out=out[1:])
        out[1:] += self.vertices[0]
        return out

    @cached_property
    def enclosed_area(self) -> float:
        """Lifted shoelace area; meaningful for contractible curves."""
        return shoelace_area(self.lifted_vertices[:-1])

    def _locate(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.length)
        idx = np.searchsorted(self.prefix_lengths, s, side="right") - 1
        idx = np.clip(idx, 0, len(self.vertices) - 1)
        frac = (s - self.prefix_lengths[idx]) / self.edge_lengths[idx]
        return idx, frac

    def points_at(self, s):
        """Reduced positions at arc-length parameters s (mod total length).

        Returns ``(points, edge_index, fraction)``.
        """
        idx, frac = self._locate(s)
        pts = self.vertices[idx] + frac[..., None] * self.displacements[idx]
        return reduce_mod1(pts), idx, frac

    def lifted_points_at(self, s) -> np.ndarray:
        """Positions at arc-length parameters on the lift (no reduction)."""
        idx, frac = self._locate(s)
        lifted = self.lifted_vertices
        return lifted[idx] + frac[..., None] * (lifted[idx + 1] - lifted[idx])

    def equidistributed_params(self, m: int) -> np.ndarray:
        return np.arange(m) * (self.length / m)


def curve_from_plane(points, closing_offset=(0, 0), label: str = "",
                     generation: int = 0) -> ClosedCurve:
    """Build a curve from plane (lifted) vertices.

    The closing edge runs from the last point to the first translated by
    ``closing_offset`` (the homology class).
    """
    p = np.asarray(points, dtype=float)
    v = reduce_mod1(p)
    offsets = p - v
    lifts = np.roll(offsets, -1, axis=0) - offsets
    lifts[-1] += np.asarray(closing_offset, dtype=float)
    lifts_int = np.rint(lifts)
    if np.max(np.abs(lifts - lifts_int)) > 1e-9:
        raise ValueError("plane vertices do not produce integer lift increments")
    return ClosedCurve(v, lifts_int.astype(np.int64), label=label, generation=generation)


def round_circle(center, radius: float, n: int = 64, label: str = "circle") -> ClosedCurve:
    """Regular n-gon approximation of a round circle."""
    if n < 3:
        raise ValueError("need at least 3 vertices")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = np.asarray(center, dtype=float) + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return curve_from_plane(pts, label=label)


def flat_circle(homology, offset: float = 0.0, n: int = 8, label: str = "flat") -> ClosedCurve:
    """Straight closed geodesic in a primitive homology class.

    ``offset`` translates the line perpendicular to itself (for class (1,0)
    it is the height y, for (0,1) the abscissa x).
    """
    p, q = int(homology[0]), int(homology[1])
    if (p, q) == (0, 0) or math.gcd(abs(p), abs(q)) != 1:
        raise ValueError("homology class must be primitive and nonzero")
    if n < 3:
        raise ValueError("need at least 3 vertices")
    direction = np.array([p, q], dtype=float)
    normal = np.array([-q, p], dtype=float) / math.hypot(p, q)
    t = np.arange(n)[:, None] / n
    pts = normal * offset + t * direction
    return curve_from_plane(pts, closing_offset=(p, q), label=label)


def stadium(center, direction, straight: float, width: float, n_arc: int = 24,
            label: str = "stadium") -> ClosedCurve:
    """Stadium curve: two straight sides along ``direction`` joined by caps.

    The straight sides are leaf arcs when ``direction`` is an eigenvector of
    a linear map.  Stadiums built from the same dimensions bound the same
    area regardless of orientation (the template is moved rigidly).
    """
    if straight <= 0 or width <= 0:
        raise ValueError("straight and width must be positive")
    if n_arc < 2:
        raise ValueError("need at least 2 arc segments per cap")
    u = np.asarray(direction, dtype=float)
    u = u / math.hypot(u[0], u[1])
    nvec = np.array([-u[1], u[0]])
    h, r = straight / 2.0, width / 2.0
    local = [(-h, -r), (h, -r)]
    for j in range(1, n_arc):
        phi = -0.5 * math.pi + math.pi * j / n_arc
        local.append((h + r * math.cos(phi), r * math.sin(phi)))
    local.extend([(h, r), (-h, r)])
    for j in range(1, n_arc):
        phi = 0.5 * math.pi + math.pi * j / n_arc
        local.append((-h + r * math.cos(phi), r * math.sin(phi)))
    frame = np.stack([u, nvec])
    pts = np.asarray(center, dtype=float) + np.array(local) @ frame
    return curve_from_plane(pts, label=label)


def perturb_curve(curve: ClosedCurve, scale: float, seed: int = 0) -> ClosedCurve:
    """Jitter every vertex by uniform noise of the given scale (in the lift)."""
    rng = np.random.default_rng(seed)
    lifted = curve.lifted_vertices[:-1] + rng.uniform(-scale, scale, size=(len(curve), 2))
    return curve_from_plane(lifted, closing_offset=curve.homology_class,
                            label=curve.label, generation=curve.generation)


def signed_area(lifted_polygon) -> float:
    """Shoelace area of a closed lifted polygon (sign follows orientation)."""
    return shoelace_area(lifted_polygon)


def curve_length(curve: ClosedCurve) -> float:
    """Total Euclidean length of the lifted edges."""
    return curve.length


# ---------------------------------------------------------------------------
# evolution under a map with adaptive refinement
# ---------------------------------------------------------------------------


class _BudgetSignal(Exception):
    def __init__(self, needed: int):
        self.needed = needed


def _refine_image_path(surface_map: SurfaceMap, lifted: np.ndarray, max_sag: float,
                       vertex_budget: int, max_edge: float = MAX_EDGE_EXTENT):
    """Image of a lifted path with adaptive midpoint insertion.

    Source edges are subdivided until every image edge deviates from the
    true image arc by less than ``max_sag`` at the probed midpoint and has
    lifted extent at most ``max_edge``.  Returns (source, image) paths.
    """
    src = np.asarray(lifted, dtype=float)
    img = surface_map.apply_lift(src)
    while True:
        seg = img[1:] - img[:-1]
        mids = 0.5 * (src[:-1] + src[1:])
        mid_img = surface_map.apply_lift(mids)
        sag = np.linalg.norm(mid_img - 0.5 * (img[:-1] + img[1:]), axis=1)
        extent = np.max(np.abs(seg), axis=1)
        bad = (sag > max_sag) | (extent > max_edge)
        n_bad = int(bad.sum())
        if n_bad == 0:
            return src, img
        if len(src) + n_bad > vertex_budget:
            raise _BudgetSignal(len(src) + n_bad)
        new_src = np.empty((len(src) + n_bad, 2))
        new_img = np.empty_like(new_src)
        pos = np.arange(len(src)) + np.concatenate([[0], np.cumsum(bad)])
        new_src[pos] = src
        new_img[pos] = img
        ins = pos[:-1][bad] + 1
        new_src[ins] = mids[bad]
        new_img[ins] = mid_img[bad]
        src, img = new_src, new_img


def evolve_open_path(surface_map: SurfaceMap, lifted: np.ndarray, steps: int,
                     max_sag: float, vertex_budget: int = DEFAULT_VERTEX_BUDGET) -> list[np.ndarray]:
    """Iterate an open lifted polyline, refining adaptively at each step."""
    out = []
    path = np.asarray(lifted, dtype=float)
    for step in range(steps):
        try:
            _, path = _refine_image_path(surface_map, path, max_sag, vertex_budget)
        except _BudgetSignal:
            raise VertexBudgetExceeded(vertex_budget, step + 1, []) from None
        out.append(path)
    return out


def evolve(curve: ClosedCurve, surface_map: SurfaceMap, steps: int, max_sag: float,
           vertex_budget: int = DEFAULT_VERTEX_BUDGET) -> list[ClosedCurve]:
    """Images [phi(L), phi^2(L), ..., phi^steps(L)] with adaptive refinement.

    Raises :class:`VertexBudgetExceeded` (with the completed prefix attached)
    when a step would need more than ``vertex_budget`` vertices.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if max_sag <= 0:
        raise ValueError("max_sag must be positive")
    hom = surface_map.homology_matrix()
    done: list[ClosedCurve] = []
    current = curve
    for step in range(1, steps + 1):
        try:
            _, img = _refine_image_path(surface_map, current.lifted_vertices,
                                        max_sag, vertex_budget)
        except _BudgetSignal:
            raise VertexBudgetExceeded(vertex_budget, step, done) from None
        new_class = hom @ np.asarray(current.homology_class)
        nxt = _curve_from_lifted_cycle(img, new_class, label=curve.label,
                                       generation=curve.generation + step)
        done.append(nxt)
        current = nxt
    return done


def _curve_from_lifted_cycle(lifted: np.ndarray, homology, label: str,
                             generation: int) -> ClosedCurve:
    """Reduce a closed lifted polyline (first point repeated at the end)."""
    disp = np.diff(lifted, axis=0)
    keep = np.ones(len(lifted) - 1, dtype=bool)
    keep[1:] = np.any(disp[:-1] != 0.0, axis=1)
    pts = lifted[:-1][keep]
    v = reduce_mod1(pts)
    offsets = pts - v
    lifts = np.roll(offsets, -1, axis=0) - offsets
    lifts[-1] += np.asarray(homology, dtype=float)
    lifts_int = np.rint(lifts)
    if np.max(np.abs(lifts - lifts_int)) > 1e-6:
        raise RuntimeError("lifted cycle failed to close on integer lifts")
    return ClosedCurve(v, lifts_int.astype(np.int64), label=label, generation=generation)


# ---------------------------------------------------------------------------
# tubular neighborhoods
# ---------------------------------------------------------------------------


class CurveProximity:
    """Distance queries from reduced points to a curve on the torus.

    Samples the curve at the given spacing, replicates the samples over the
    3x3 integer translates, and answers queries with a kd-tree prefilter
    followed by exact point-to-segment distances against candidate edges.
    The result never underestimates the true distance and overestimates it
    by at most half the sample spacing.
    """

    K_CANDIDATES = 12

    def __init__(self, curve: ClosedCurve, sample_spacing: float = 0.01):
        self.curve = curve
        self.spacing = float(sample_spacing)
        n_sub = np.maximum(1, np.ceil(curve.edge_lengths / self.spacing).astype(int))
        edge_ids = np.repeat(np.arange(len(curve)), n_sub)
        starts = np.repeat(np.concatenate([[0], np.cumsum(n_sub)[:-1]]), n_sub)
        sub_j = np.arange(int(n_sub.sum())) - starts
        t = sub_j / n_sub[edge_ids]
        lifted = curve.lifted_vertices
        samples = reduce_mod1(lifted[edge_ids] + t[:, None] * curve.displacements[edge_ids])
        shifts = np.array([[dx, dy] for dx in (-1, 0, 1) for dy in (-1, 0, 1)], dtype=float)
        rep = (samples[None, :, :] + shifts[:, None, :]).reshape(-1, 2)
        self._rep_owner = np.tile(edge_ids, 9)
        self._rep_shift = np.repeat(shifts, len(samples), axis=0)
        self._seg_start = lifted[:-1] - np.floor(lifted[:-1])  # == reduced vertices
        self._seg_disp = curve.displacements
        self._tree = cKDTree(rep)

    def distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        k = min(self.K_CANDIDATES, self._tree.n)
        _, idx = self._tree.query(flat, k=k, workers=-1)
        if k == 1:
            idx = idx[:, None]
        owners = self._rep_owner[idx]
        anchor = self._rep_shift[idx] + self._seg_start[owners]
        disp = self._seg_disp[owners]
        dist = point_segment_distance(flat[:, None, :], anchor, anchor + disp)
        return dist.min(axis=1).reshape(pts.shape[:-1])


class TubularRegion:
    """The set of torus points within ``radius`` of a core curve.

    ``radius`` must stay below 0.25 so the neighborhood never wraps onto
    itself and the nine-translate distance trick is valid.
    """

    def __init__(self, core: ClosedCurve, radius: float):
        if not 0.0 < radius < 0.25:
            raise ValueError("tubular radius must lie in (0, 0.25)")
        self.core = core
        self.radius = float(radius)
        self._proximity = CurveProximity(core, sample_spacing=radius / 8.0)

    def distance_to_core(self, points) -> np.ndarray:
        return self._proximity.distance(points)

    def contains(self, points) -> np.ndarray:
        return self.distance_to_core(points) <= self.radius


class WholeTorus:
    """Region object standing in for the whole torus (no constraint)."""

    radius = None
    core = None

    def distance_to_core(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.zeros(pts.shape[:-1])

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.ones(pts.shape[:-1], dtype=bool)


FULL_TORUS = WholeTorus()


def length_in_region(curve: ClosedCurve, region) -> float:
    """Total length of the sub-arcs of ``curve`` inside ``region``.

    Each edge is sampled at spacing radius/4 (incursions at the tube scale
    cannot slip between samples because the distance to the core is
    1-Lipschitz along the curve); every boundary crossing is then refined
    by bisection to 1e-10 in arc length.
    """
    if isinstance(region, WholeTorus):
        return curve.length
    ds = region.radius / 4.0
    lifted = curve.lifted_vertices
    lengths = curve.edge_lengths
    n_sub = np.maximum(1, np.ceil(lengths / ds).astype(int))

    edge_idx = np.repeat(np.arange(len(curve)), n_sub + 1)
    block = np.repeat(np.concatenate([[0], np.cumsum(n_sub + 1)[:-1]]), n_sub + 1)
    j = np.arange(int((n_sub + 1).sum())) - block
    t = j / n_sub[edge_idx]
    pts = lifted[edge_idx] + t[:, None] * curve.displacements[edge_idx]
    inside = region.contains(reduce_mod1(pts))

    same_edge = edge_idx[:-1] == edge_idx[1:]
    both_in = inside[:-1] & inside[1:] & same_edge
    total = float(np.sum(((t[1:] - t[:-1]) * lengths[edge_idx[:-1]])[both_in]))

    change = (inside[:-1] != inside[1:]) & same_edge
    cross = np.nonzero(change)[0]
    if len(cross):
        lo0 = t[cross]
        hi0 = t[cross + 1]
        eidx = edge_idx[cross]
        leaving = inside[cross]  # True: inside -> outside
        a = lifted[eidx]
        d = curve.displacements[eidx]
        elen = lengths[eidx]
        lo, hi = lo0.copy(), hi0.copy()
        for _ in range(64):
            if np.max((hi - lo) * elen) < 1e-10:
                break
            mid = 0.5 * (lo + hi)
            m_in = region.contains(reduce_mod1(a + mid[:, None] * d))
            move_lo = m_in == leaving
            lo = np.where(move_lo, mid, lo)
            hi = np.where(move_lo, hi, mid)
        t_star = 0.5 * (lo + hi)
        partial = np.where(leaving, t_star - lo0, hi0 - t_star)
        total += float(np.sum(partial * elen))
    return total


# ---------------------------------------------------------------------------
# intersections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntersectionPoint:
    """A transverse crossing of two curves on the torus."""

    position: TorusPoint
    sign: int
    arc_param_a: float
    arc_param_b: float
    edge_a: int
    frac_a: float
    edge_b: int
    frac_b: float


ANGLE_TOL = 1e-8
ENDPOINT_TOL = 1e-12


def _split_long_edges(curve: ClosedCurve, max_extent: float = 0.45):
    """Sub-edges with lifted extent <= max_extent, tagged with parent edges.

    Returns (start, disp, edge_id, t0, dt): sub-edge j covers fractions
    [t0, t0+dt] of original edge edge_id, starting at lifted point start.
    """
    d = curve.displacements
    n_sub = np.maximum(1, np.ceil(np.max(np.abs(d), axis=1) / max_extent).astype(int))
    edge_ids = np.repeat(np.arange(len(curve)), n_sub)
    block = np.repeat(np.concatenate([[0], np.cumsum(n_sub)[:-1]]), n_sub)
    sub_j = np.arange(int(n_sub.sum())) - block
    t0 = sub_j / n_sub[edge_ids]
    dt = 1.0 / n_sub[edge_ids]
    lifted = curve.lifted_vertices
    starts = lifted[edge_ids] + t0[:, None] * d[edge_ids]
    return starts, d[edge_ids] * dt[:, None], edge_ids, t0, dt


_SHIFTS = [np.array([dx, dy]) for dx in (-1.0, 0.0, 1.0) for dy in (-1.0, 0.0, 1.0)]


def intersections(a: ClosedCurve, b: ClosedCurve) -> list[IntersectionPoint]:
    """All transverse crossings of two curves, sorted along curve ``a``.

    Raises :class:`DegenerateIntersection` for near-tangential crossings
    (angle below 1e-8) or crossings grazing an edge endpoint; callers
    resolve those by perturbing one curve.
    """
    a_start, a_disp, a_edge, a_t0, a_dt = _split_long_edges(a)
    b_start, b_disp, b_edge, b_t0, b_dt = _split_long_edges(b)
    a_start_red = reduce_mod1(a_start)
    b_start_red = reduce_mod1(b_start)

    prox = CurveProximity(b, sample_spacing=0.05)
    a_ext = float(np.max(np.linalg.norm(a_disp, axis=1)))
    near = prox.distance(a_start_red) <= a_ext + prox.spacing + 1e-9
    cand = np.nonzero(near)[0]
    if len(cand) == 0:
        return []

    found = {}
    nb = len(b_start)
    chunk = max(1, 500_000 // max(nb, 1))
    for c0 in range(0, len(cand), chunk):
        rows = cand[c0:c0 + chunk]
        m = len(rows)
        A0 = np.repeat(a_start_red[rows], nb, axis=0)
        Ad = np.repeat(a_disp[rows], nb, axis=0)
        ai = np.repeat(rows, nb)
        B0 = np.tile(b_start_red, (m, 1))
        Bd = np.tile(b_disp, (m, 1))
        bi = np.tile(np.arange(nb), m)
        lo_a = np.minimum(A0, A0 + Ad)
        hi_a = np.maximum(A0, A0 + Ad)
        lo_b0 = np.minimum(B0, B0 + Bd)
        hi_b0 = np.maximum(B0, B0 + Bd)
        for shift in _SHIFTS:
            B0s = B0 + shift
            lo_b = lo_b0 + shift
            hi_b = hi_b0 + shift
            overlap = np.all((lo_a <= hi_b + 1e-12) & (lo_b <= hi_a + 1e-12), axis=1)
            if not overlap.any():
                continue
            idx = np.nonzero(overlap)[0]
            r = Ad[idx]
            s = Bd[idx]
            qp = B0s[idx] - A0[idx]
            denom = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
            norm_prod = np.linalg.norm(r, axis=1) * np.linalg.norm(s, axis=1)
            parallel = np.abs(denom) <= ANGLE_TOL * norm_prod
            if parallel.any():
                par = np.nonzero(parallel)[0]
                gap = point_segment_distance(B0s[idx][par], A0[idx][par], A0[idx][par] + r[par])
                if np.any(gap < 1e-9):
                    raise DegenerateIntersection("overlapping near-parallel edges")
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
                u = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / denom
            hit = (~parallel) & (t >= 0.0) & (t < 1.0) & (u >= 0.0) & (u < 1.0)
            if not hit.any():
                continue
            grazing = hit & (
                (np.minimum(t, 1.0 - t) < ENDPOINT_TOL) | (np.minimum(u, 1.0 - u) < ENDPOINT_TOL)
            )
            if grazing.any():
                raise DegenerateIntersection("crossing grazes an edge endpoint")
            for j in np.nonzero(hit)[0]:
                pair = idx[j]
                ia, ib = ai[pair], bi[pair]
                ea, eb = int(a_edge[ia]), int(b_edge[ib])
                ta = a_t0[ia] + t[j] * a_dt[ia]
                tb = b_t0[ib] + u[j] * b_dt[ib]
                key = (ea, round(float(ta), 12), eb, round(float(tb), 12))
                if key in found:
                    continue
                pos = reduce_mod1(A0[pair] + t[j] * r[j])
                found[key] = IntersectionPoint(
                    position=TorusPoint(float(pos[0]), float(pos[1])),
                    sign=1 if denom[j] > 0 else -1,
                    arc_param_a=float(a.prefix_lengths[ea] + ta * a.edge_lengths[ea]),
                    arc_param_b=float(b.prefix_lengths[eb] + tb * b.edge_lengths[eb]),
                    edge_a=ea,
                    frac_a=float(ta),
                    edge_b=eb,
                    frac_b=float(tb),
                )
    out = sorted(found.values(), key=lambda x: x.arc_param_a)
    if len(out) >= 2:
        gaps = np.diff([x.arc_param_a for x in out] + [out[0].arc_param_a + a.length])
        if np.min(gaps) < 1e-12:
            raise DegenerateIntersection("two crossings at the same arc parameter")
    return out


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------


def curve_to_csv(curve: ClosedCurve, path) -> None:
    """Write rows x,y,dlift_x,dlift_y (one per vertex/edge)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "dlift_x", "dlift_y"])
        for v, c in zip(curve.vertices, curve.edge_lifts):
            writer.writerow([repr(float(v[0])), repr(float(v[1])), int(c[0]), int(c[1])])


def curve_from_csv(path, label: str = "") -> ClosedCurve:
    verts, lifts = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["x", "y"]:
            raise ValueError(f"unexpected curve CSV header: {header}")
        for row in reader:
            verts.append([float(row[0]), float(row[1])])
            lifts.append([int(row[2]), int(row[3])])
    return ClosedCurve(np.array(verts), np.array(lifts), label=label)
