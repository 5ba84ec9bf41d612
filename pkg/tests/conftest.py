import numpy as np
import pytest

from entropylab.dynamics import (
    LinearHyperbolic,
    Shear,
    ShearComposition,
    TrigPolynomial,
    cat_map,
    identity_shear,
)

LOG_GOLDEN = float(np.log((3.0 + np.sqrt(5.0)) / 2.0))  # eigenvalue oracle for the cat map


@pytest.fixture
def cat():
    return cat_map()


@pytest.fixture
def identity():
    return identity_shear()


@pytest.fixture
def gentle_shear():
    """A mildly chaotic smooth perturbation of the identity."""
    return ShearComposition(
        (
            Shear("x", TrigPolynomial((("sin", 1, 0.05),))),
            Shear("y", TrigPolynomial((("sin", 1, 0.04), ("cos", 2, 0.01)))),
        )
    )


@pytest.fixture
def inverse_cat():
    return LinearHyperbolic(((1, -1), (-1, 2)))
