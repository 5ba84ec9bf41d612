"""Area-preserving maps of the two-torus: orbits, Jacobians, Lyapunov oracle.

Two map families are supported.  ``LinearHyperbolic`` wraps an integer
matrix with determinant one and trace of modulus above two (the cat map and
its relatives).  ``ShearComposition`` composes coordinate shears
``x -> x + f(y)`` and ``y -> y + g(x)`` with trigonometric-polynomial
profiles; such compositions are exactly area preserving and have analytic
Jacobians, which makes them a convenient smooth perturbation family.

All logarithms in this package are natural logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import reduce_mod1, torus_distance

__all__ = [
    "TorusPoint",
    "TrigPolynomial",
    "Shear",
    "ShearComposition",
    "LinearHyperbolic",
    "SurfaceMap",
    "OrbitSegment",
    "NonFiniteError",
    "apply",
    "apply_lift",
    "orbit",
    "orbit_array",
    "jacobian",
    "homology_matrix",
    "lyapunov_top",
    "reference_topological_entropy",
    "cat_map",
    "identity_shear",
]

TWO_PI = 2.0 * math.pi


class NonFiniteError(ArithmeticError):
    """A cocycle product stopped being finite despite renormalization."""


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus R^2/Z^2, stored with coordinates in [0, 1)."""

    x: float
    y: float

    def __post_init__(self):
        arr = reduce_mod1(np.array([self.x, self.y], dtype=float))
        object.__setattr__(self, "x", float(arr[0]))
        object.__setattr__(self, "y", float(arr[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "TorusPoint":
        return cls(float(arr[0]), float(arr[1]))


@dataclass(frozen=True)
class TrigPolynomial:
    """Finite trigonometric polynomial ``sum_j amp_j * trig(2*pi*freq_j*t)``.

    ``terms`` is a tuple of ``(kind, frequency, amplitude)`` with kind
    ``"sin"`` or ``"cos"`` and integer frequency.  Frequency 0 with kind
    ``"cos"`` gives a constant (a rigid translation when used as a shear
    profile).
    """

    terms: tuple[tuple[str, int, float], ...] = ()

    def __post_init__(self):
        for kind, freq, _amp in self.terms:
            if kind not in ("sin", "cos"):
                raise ValueError(f"unknown term kind {kind!r}")
            if int(freq) != freq or freq < 0:
                raise ValueError("frequencies must be nonnegative integers")

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        for kind, freq, amp in self.terms:
            w = TWO_PI * freq * t
            acc = acc + amp * (np.sin(w) if kind == "sin" else np.cos(w))
        return acc

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        for kind, freq, amp in self.terms:
            w = TWO_PI * freq * t
            if kind == "sin":
                acc = acc + amp * TWO_PI * freq * np.cos(w)
            else:
                acc = acc - amp * TWO_PI * freq * np.sin(w)
        return acc


@dataclass(frozen=True)
class Shear:
    """A single coordinate shear: ``x -> x + f(y)`` (axis "x") or the swap."""

    axis: str
    profile: TrigPolynomial

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError("shear axis must be 'x' or 'y'")


@dataclass(frozen=True)
class ShearComposition:
    """Composition of coordinate shears, applied in tuple order.

    The empty composition is the identity map.
    """

    shears: tuple[Shear, ...] = ()

    def apply_lift(self, pts):
        """Lifted map on R^2, equivariant under integer translations.

        Profiles are evaluated at the mod-1 coordinate so equivariance is
        exact even for lifted coordinates far from the fundamental domain.
        """
        p = np.array(pts, dtype=float, copy=True)
        x, y = p[..., 0], p[..., 1]
        for shear in self.shears:
            if shear.axis == "x":
                x += shear.profile.eval(np.mod(y, 1.0))
            else:
                y += shear.profile.eval(np.mod(x, 1.0))
        return p

    def apply_array(self, pts):
        return reduce_mod1(self.apply_lift(pts))

    def jacobian(self, pt):
        p = np.array(pt, dtype=float, copy=True)
        jac = np.eye(2)
        for shear in self.shears:
            if shear.axis == "x":
                step = np.array([[1.0, float(shear.profile.derivative(p[1] % 1.0))], [0.0, 1.0]])
                p[0] += float(shear.profile.eval(p[1] % 1.0))
            else:
                step = np.array([[1.0, 0.0], [float(shear.profile.derivative(p[0] % 1.0)), 1.0]])
                p[1] += float(shear.profile.eval(p[0] % 1.0))
            jac = step @ jac
        return jac

    def homology_matrix(self) -> np.ndarray:
        return np.eye(2, dtype=int)


@dataclass(frozen=True)
class LinearHyperbolic:
    """Integer matrix torus automorphism with det 1 and |trace| > 2."""

    matrix: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        m = self.matrix
        entries = [m[0][0], m[0][1], m[1][0], m[1][1]]
        if any(int(e) != e for e in entries):
            raise ValueError("matrix entries must be integers")
        a, b, c, d = (int(e) for e in entries)
        if a * d - b * c != 1:
            raise ValueError("matrix determinant must be exactly 1")
        if abs(a + d) <= 2:
            raise ValueError("matrix must be hyperbolic (|trace| > 2)")
        object.__setattr__(self, "matrix", ((a, b), (c, d)))

    def apply_lift(self, pts):
        p = np.asarray(pts, dtype=float)
        (a, b), (c, d) = self.matrix
        x, y = p[..., 0], p[..., 1]
        return np.stack([a * x + b * y, c * x + d * y], axis=-1)

    def apply_array(self, pts):
        return reduce_mod1(self.apply_lift(pts))

    def jacobian(self, pt):
        return np.array(self.matrix, dtype=float)

    def homology_matrix(self) -> np.ndarray:
        return np.array(self.matrix, dtype=int)

    def inverse(self) -> "LinearHyperbolic":
        (a, b), (c, d) = self.matrix
        return LinearHyperbolic(((d, -b), (-c, a)))


SurfaceMap = LinearHyperbolic | ShearComposition


def cat_map() -> LinearHyperbolic:
    """The standard cat map [[2, 1], [1, 1]]."""
    return LinearHyperbolic(((2, 1), (1, 1)))


def identity_shear() -> ShearComposition:
    """The identity map, expressed as an empty shear composition."""
    return ShearComposition(())


@dataclass(frozen=True)
class OrbitSegment:
    """A finite orbit {x, phi(x), ..., phi^k(x)} stored as a (k+1, 2) array."""

    start: TorusPoint
    k: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (self.k + 1, 2):
            raise ValueError(f"points must have shape ({self.k + 1}, 2)")
        object.__setattr__(self, "points", pts)

    @property
    def end(self) -> TorusPoint:
        return TorusPoint.from_array(self.points[-1])


def apply(surface_map: SurfaceMap, p: TorusPoint) -> TorusPoint:
    """One application of the map, reduced mod 1."""
    return TorusPoint.from_array(surface_map.apply_array(p.as_array()))


def apply_lift(surface_map: SurfaceMap, pts):
    """The lifted map on R^2 (no mod-1 reduction)."""
    return surface_map.apply_lift(pts)


def _orbit_scalar_linear(matrix, x: float, y: float, k: int) -> np.ndarray:
    """Tight scalar loop for linear maps; bit-identical to the array path."""
    (a, b), (c, d) = matrix
    out = np.empty((k + 1, 2))
    out[0, 0] = x
    out[0, 1] = y
    snap = 1.0 - 1e-15
    for i in range(1, k + 1):
        xn = (a * x + b * y) % 1.0
        yn = (c * x + d * y) % 1.0
        if xn > snap:
            xn = 0.0
        if yn > snap:
            yn = 0.0
        out[i, 0] = xn
        out[i, 1] = yn
        x, y = xn, yn
    return out


def orbit(surface_map: SurfaceMap, x: TorusPoint, k: int) -> OrbitSegment:
    """The k-orbit through x; points[i+1] is bit-identical to apply(points[i])."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if isinstance(surface_map, LinearHyperbolic):
        pts = _orbit_scalar_linear(surface_map.matrix, x.x, x.y, k)
    else:
        pts = np.empty((k + 1, 2))
        p = x.as_array()
        pts[0] = p
        for i in range(k):
            p = surface_map.apply_array(p)
            pts[i + 1] = p
    return OrbitSegment(start=x, k=k, points=pts)


def orbit_array(surface_map: SurfaceMap, starts, k: int) -> np.ndarray:
    """Orbits of a batch of starting points; shape (k+1, m, 2).

    Uses the same per-step arithmetic as :func:`orbit`, so rows agree
    bitwise with individually computed orbits.
    """
    p = np.array(starts, dtype=float)
    if isinstance(surface_map, LinearHyperbolic) and p.ndim == 2 and len(p) * max(k, 1) < 2 ** 24:
        if len(p) <= 64:
            out = np.empty((k + 1, len(p), 2))
            for j in range(len(p)):
                out[:, j, :] = _orbit_scalar_linear(surface_map.matrix, p[j, 0], p[j, 1], k)
            return out
    out = np.empty((k + 1,) + p.shape)
    out[0] = p
    for i in range(k):
        p = surface_map.apply_array(p)
        out[i + 1] = p
    return out


def jacobian(surface_map: SurfaceMap, p: TorusPoint) -> np.ndarray:
    """Derivative of the map at p (exact for both supported families)."""
    return surface_map.jacobian(p.as_array())


def homology_matrix(surface_map: SurfaceMap) -> np.ndarray:
    """Induced integer matrix on first homology (edge-lift transport)."""
    return surface_map.homology_matrix()


def lyapunov_top(surface_map: SurfaceMap, x: TorusPoint, k: int, transient: int = 100) -> float:
    """Top Lyapunov exponent estimate via renormalized cocycle products.

    The tangent vector is renormalized every step; ``transient`` steps are
    run first so the vector aligns with the expanding direction before the
    average starts.  Raises :class:`NonFiniteError` if the product stops
    being finite (which renormalization should prevent).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    p = x.as_array()
    v = np.array([0.6, 0.8])
    for _ in range(transient):
        v = surface_map.jacobian(p) @ v
        norm = float(np.hypot(v[0], v[1]))
        if not math.isfinite(norm) or norm == 0.0:
            raise NonFiniteError("tangent vector left the finite range during transient")
        v /= norm
        p = surface_map.apply_array(p)
    total = 0.0
    for _ in range(k):
        v = surface_map.jacobian(p) @ v
        norm = float(np.hypot(v[0], v[1]))
        if not math.isfinite(norm) or norm == 0.0:
            raise NonFiniteError("cocycle product overflowed")
        total += math.log(norm)
        v /= norm
        p = surface_map.apply_array(p)
    return total / k


def reference_topological_entropy(surface_map: SurfaceMap) -> float | None:
    """log of the spectral radius for linear maps; None for shear compositions."""
    if isinstance(surface_map, LinearHyperbolic):
        eigs = np.linalg.eigvals(np.array(surface_map.matrix, dtype=float))
        return float(np.log(np.max(np.abs(eigs))))
    return None


def recurrence_times(surface_map: SurfaceMap, x: TorusPoint, k_max: int, eta: float) -> np.ndarray:
    """All k <= k_max with d(x, phi^k(x)) < eta (torus distance)."""
    pts = orbit(surface_map, x, k_max).points
    d = torus_distance(pts[1:], pts[0])
    return np.nonzero(d < eta)[0] + 1
