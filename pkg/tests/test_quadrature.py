import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dislogeo.quadrature import QuadratureSpec, fsum_columns


@given(st.integers(1, 8), st.integers(2, 16), st.integers(0, 15))
def test_exact_for_polynomials(panels, nodes, degree):
    if degree > 2 * nodes - 1:
        return
    x, w = QuadratureSpec(panels, nodes).rule(0.0, 2.0)
    assert np.dot(w, x**degree) == pytest.approx(2.0 ** (degree + 1) / (degree + 1), rel=1e-12)


def test_2d_and_3d_rules():
    U, V, W = QuadratureSpec(4, 4).rule_2d(((0, 1), (0, 2)))
    assert fsum_columns(W * U * V) == pytest.approx(1.0)
    X, W3 = QuadratureSpec(2, 3).rule_3d((0, 0, 0), (1, 1, 1))
    assert fsum_columns(W3 * X[:, 0] * X[:, 1] ** 2 * X[:, 2] ** 3) == pytest.approx(1 / 24)


def test_smooth_integral_converges():
    x, w = QuadratureSpec(64, 8).rule(0, math.pi)
    assert np.dot(w, np.sin(x)) == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("panels, nodes", [(0, 8), (4, 1), (4, 17)])
def test_invalid_specs(panels, nodes):
    with pytest.raises(ValueError):
        QuadratureSpec(panels, nodes)


def test_fsum_columns_is_order_independent():
    vals = np.array([[1e16, 1.0], [1.0, 2.0], [-1e16, 3.0]])
    assert fsum_columns(vals).tolist() == [1.0, 6.0]
    assert fsum_columns(vals[::-1]).tolist() == [1.0, 6.0]
