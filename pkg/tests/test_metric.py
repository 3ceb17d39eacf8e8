import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislogeo.errors import NotPositiveDefinite
from dislogeo.exprfield import VectorField
from dislogeo.frame import conformal, equidistant, helical, perturbed_frame
from dislogeo.metric import (
    ExpressionMetric,
    FrameMetric,
    bianchi_residual,
    christoffel_at,
    conformal_transform,
    divergence_at,
    killing_residual,
    metric_at,
    metric_compatibility_residual,
    riemann_at,
)

P = (0.3, 0.6, 0.45)


def test_helical_metric_is_flat():
    np.testing.assert_allclose(metric_at(helical(0.9), P), np.eye(3), atol=1e-15)
    assert riemann_at(helical(0.9), P).max_abs_riemann < 1e-14


@pytest.mark.parametrize("k", [0.2, 0.5, 1.3])
def test_equidistant_frame_has_constant_negative_scalar(k):
    X = np.random.default_rng(1).uniform(0, 1, (6, 3))
    report = riemann_at(equidistant(f"{k}*X3"), X)
    np.testing.assert_allclose(report.scalar, -6 * k**2, rtol=1e-12)


def test_conformal_christoffel_symbols():
    k = 0.4
    G = christoffel_at(conformal(f"{k}*X3"), P).gamma
    assert G[0, 0, 2] == pytest.approx(-k, rel=1e-13)
    assert G[2, 0, 0] == pytest.approx(k, rel=1e-13)
    assert G[2, 2, 2] == pytest.approx(-k, rel=1e-13)
    assert G[0, 1, 2] == 0.0


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_levi_civita_is_compatible_and_bianchi_holds(seed):
    frame = perturbed_frame(np.random.default_rng(seed), amplitude=0.3)
    X = np.random.default_rng(seed + 7).uniform(0.05, 0.95, (4, 3))
    assert np.max(metric_compatibility_residual(frame, X)) < 1e-13
    report = riemann_at(frame, X)
    assert bianchi_residual(report) < 1e-12 * max(1.0, report.max_abs_riemann)


def test_frame_metric_jet_matches_finite_differences(rng):
    frame = perturbed_frame(rng, amplitude=0.3)
    g = FrameMetric(frame)
    X = rng.uniform(0.1, 0.9, (3, 3))
    jet = g.jet(X, 2)
    h = 1e-5
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        fd = (g.jet(X + step, 0).g - g.jet(X - step, 0).g) / (2 * h)
        np.testing.assert_allclose(jet.dg[:, k], fd, atol=1e-9)
        fd2 = (g.jet(X + step, 1).dg - g.jet(X - step, 1).dg) / (2 * h)
        np.testing.assert_allclose(jet.ddg[:, :, k], fd2, atol=1e-8)


def test_frame_metric_matches_expression_metric():
    k = 0.3
    expr = ExpressionMetric.from_upper([f"exp(-2*{k}*X3)", 0, 0, f"exp(-2*{k}*X3)", 0, f"exp(-2*{k}*X3)"])
    a, b = riemann_at(expr, P), riemann_at(conformal(f"{k}*X3"), P)
    np.testing.assert_allclose(a.riemann, b.riemann, atol=1e-14)


def test_divergence_of_conformal_frame_vector():
    k = 0.4
    e3 = VectorField.parse(["0", "0", f"exp({k}*X3)"])
    assert divergence_at(conformal(f"{k}*X3"), e3, P) == pytest.approx(-2 * k * math.exp(k * P[2]), rel=1e-13)


def test_euclidean_killing_fields():
    g = ExpressionMetric.euclidean()
    rotation = VectorField.parse(["X2", "-X1", "0"])
    translation = VectorField.parse(["1", "2", "3"])
    dilation = VectorField.parse(["X1", "X2", "X3"])
    assert killing_residual(g, rotation, P) == 0.0
    assert killing_residual(g, translation, P) == 0.0
    assert killing_residual(g, dilation, P) == pytest.approx(2 * math.sqrt(3))


def test_conformal_transform_scales_scalar_curvature():
    g = conformal_transform(ExpressionMetric.euclidean(), "0.5*X3")
    assert isinstance(g, ExpressionMetric)
    # exp(2 phi) delta in 3-D: R = -exp(-2 phi) (4 lap phi + 2 |grad phi|^2), phi = -X3/2
    report = riemann_at(g, P)
    assert report.scalar == pytest.approx(-0.5 * math.exp(P[2]), rel=1e-12)


def test_not_positive_definite():
    g = ExpressionMetric.from_upper(["1", "0", "0", "1", "0", "X1 - 0.5"])
    with pytest.raises(NotPositiveDefinite) as info:
        riemann_at(g, [[0.9, 0, 0], [0.1, 0.2, 0.3]])
    np.testing.assert_array_equal(info.value.point, [0.1, 0.2, 0.3])
