"""Entropy estimators for area-preserving maps of the two-torus.

The package provides four independently computed growth rates for explicit
torus maps -- bigon-barcode growth, curve volume growth, separated-chord
counting (a metric-entropy lower bound), and a Lyapunov/eigenvalue reference
value -- together with the empirical-measure machinery tying them together.
"""

__version__ = "0.1.0"

from .dynamics import (
    LinearHyperbolic,
    NonFiniteError,
    OrbitSegment,
    Shear,
    ShearComposition,
    TorusPoint,
    TrigPolynomial,
    apply,
    cat_map,
    jacobian,
    lyapunov_top,
    orbit,
    reference_topological_entropy,
)

__all__ = [
    "__version__",
    "LinearHyperbolic",
    "NonFiniteError",
    "OrbitSegment",
    "Shear",
    "ShearComposition",
    "TorusPoint",
    "TrigPolynomial",
    "apply",
    "cat_map",
    "jacobian",
    "lyapunov_top",
    "orbit",
    "reference_topological_entropy",
]
