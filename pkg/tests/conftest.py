import numpy as np
import pytest
from hypothesis import strategies as st

from cstarphase.model import ParamPoint, TangentVector

coord = st.floats(-3.0, 3.0, allow_nan=False)
alpha_st = st.floats(0.05, 5.0, allow_nan=False)


@st.composite
def points(draw, north=True):
    """ParamPoints kept off B = 0 and, if ``north``, off the B3 < 0 Dirac string."""
    b1, b2 = draw(coord), draw(coord)
    b3 = draw(st.floats(0.1, 3.0)) if north else draw(coord)
    if not north and b1 * b1 + b2 * b2 + b3 * b3 < 0.01:
        b3 = 0.5
    return ParamPoint(b1, b2, b3, draw(alpha_st))


@st.composite
def tangents(draw):
    return TangentVector(*(draw(st.floats(-2.0, 2.0)) for _ in range(4)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_point(rng, north=True):
    b = rng.normal(size=3)
    if north:
        b[2] = abs(b[2]) + 0.2
    return ParamPoint(*b, float(rng.uniform(0.1, 3.0)))


def random_tangent(rng):
    return TangentVector(*rng.normal(size=4))
