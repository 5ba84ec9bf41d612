"""Flat-torus geometry helpers shared across the package."""

from __future__ import annotations

import numpy as np

#: coordinates this close to 1 are snapped to 0 so mod-1 reduction is stable
BOUNDARY_SNAP = 1e-15

#: max of the torus metric on the unit square, sqrt(2)/2
TORUS_DIAMETER = float(np.hypot(0.5, 0.5))


def reduce_mod1(values):
    """Reduce coordinates into [0, 1); values within 1e-15 of 1 snap to 0."""
    r = np.mod(np.asarray(values, dtype=float), 1.0)
    return np.where(r > 1.0 - BOUNDARY_SNAP, 0.0, r)


def wrap_delta(delta):
    """Wrap displacement components into [-0.5, 0.5)."""
    return np.mod(np.asarray(delta, dtype=float) + 0.5, 1.0) - 0.5


def torus_distance(p, q):
    """Distance on the flat torus between point arrays of shape (..., 2)."""
    d = wrap_delta(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return np.hypot(d[..., 0], d[..., 1])


def shoelace_area(points):
    """Signed area of a closed planar polygon given as an (n, 2) array.

    The polygon is closed implicitly (last vertex connects back to the
    first); vertices must be plane (lifted) coordinates, not mod-1 ones.
    Uses the cross(P, dP) form with a recentered anchor, which stays well
    conditioned when the lift spans thousands of units.
    """
    p = np.asarray(points, dtype=float) - np.asarray(points, dtype=float)[0]
    d = np.roll(p, -1, axis=0) - p
    return 0.5 * float(np.dot(p[:, 0], d[:, 1]) - np.dot(p[:, 1], d[:, 0]))


def polyline_prefix_lengths(points):
    """Cumulative arc length of an open polyline, shape (n,) -> (n,)."""
    p = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    out = np.empty(len(p))
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out


def point_segment_distance(points, seg_a, seg_b):
    """Plane distance from each point to the matching segment.

    All three arguments broadcast against each other with trailing axis 2.
    """
    p = np.asarray(points, dtype=float)
    a = np.asarray(seg_a, dtype=float)
    b = np.asarray(seg_b, dtype=float)
    ab = b - a
    denom = np.einsum("...i,...i->...", ab, ab)
    t = np.einsum("...i,...i->...", p - a, ab) / np.where(denom == 0.0, 1.0, denom)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def segment_pair_distance(a0, a1, b0, b1):
    """Plane distance between two segments (vectorized over leading axes)."""
    d = np.minimum(
        np.minimum(point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1)),
        np.minimum(point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)),
    )
    # crossing segments have distance 0; detect via orientation flips
    r = a1 - a0
    s = b1 - b0
    denom = np.cross(r, s)
    qp = b0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom != 0.0, np.cross(qp, s) / denom, np.inf)
        u = np.where(denom != 0.0, np.cross(qp, r) / denom, np.inf)
    crossing = (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)
    return np.where(crossing, 0.0, d)
