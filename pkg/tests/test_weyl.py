import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislogeo.errors import IntegrationFailure, NegativeTemperature
from dislogeo.frame import LoopSpec, helical, holonomic
from dislogeo.metric import ExpressionMetric, christoffel_at, metric_at
from dislogeo.density import density_tensor_at
from dislogeo.weyl import (
    ThermalModel,
    WeylStructure,
    _transport_segment,
    characteristic_length,
    gauge_consistency_residual,
    integrable_metric,
    parallel_transport_length_check,
    thermal_lambda,
    thermal_rescale_frame,
    weyl_compatibility_residual,
    weyl_connection_at,
    weyl_nonmetricity_residual,
)

P = (0.3, 0.6, 0.45)
G_TEXT = ["1 + 0.2*X3^2", "0.1*X1", "0", "1", "0.05*X2", "1 + 0.1*X1"]


def _structure(lam="0.3*X1*X2 + sin(X3)"):
    return WeylStructure.exact(ExpressionMetric.from_upper(G_TEXT), lam)


def test_nonmetricity_and_compatibility():
    w = _structure()
    X = np.random.default_rng(0).uniform(0, 1, (6, 3))
    assert np.max(weyl_nonmetricity_residual(w, X)) < 1e-14
    assert np.max(weyl_compatibility_residual(w, X)) < 1e-14


def test_exact_structure_is_levi_civita_of_rescaled_metric():
    w = _structure()
    np.testing.assert_allclose(weyl_connection_at(w, P).gamma, christoffel_at(integrable_metric(w), P).gamma, atol=1e-14)


def test_zero_kappa_reduces_to_levi_civita():
    g = ExpressionMetric.from_upper(G_TEXT)
    np.testing.assert_allclose(weyl_connection_at(WeylStructure(g), P).gamma, christoffel_at(g, P).gamma, atol=0)


def test_non_exact_structure():
    w = WeylStructure(ExpressionMetric.euclidean(), ["X2", "-X1", "0"])
    assert weyl_nonmetricity_residual(w, P) < 1e-15
    with pytest.raises(ValueError):
        weyl_compatibility_residual(w, P)
    with pytest.raises(ValueError):
        integrable_metric(w)
    with pytest.raises(ValueError):
        WeylStructure(ExpressionMetric.euclidean(), ["1", "2"])


@pytest.mark.parametrize("alpha", ["exp(X1*X3)", "2 + X2^2", "3"])
def test_gauge_invariance(alpha):
    assert gauge_consistency_residual(_structure(), alpha, P) < 1e-14
    w = WeylStructure(ExpressionMetric.euclidean(), ["X2", "-X1", "0.2"])
    assert gauge_consistency_residual(w, alpha, P) < 1e-14


@pytest.mark.parametrize(
    "curve",
    [
        LoopSpec.segment((0.1, 0.2, 0.3), (0.9, 0.7, 0.6)),
        LoopSpec.parse("0.2 + 0.5*t", "0.3 + 0.4*t^2", "0.5 + 0.2*sin(3*t)"),
        LoopSpec.circle((0.5, 0.5, 0.5), 0.3),
    ],
)
def test_transport_length_change(curve):
    w = WeylStructure(ExpressionMetric.from_upper(G_TEXT), ["X2", "-X1 + X3", "0.5*X1*X2"])
    res = parallel_transport_length_check(w, curve, [0.3, -0.2, 1.0])
    assert res.discrepancy < 1e-9
    assert res.steps > 0


def test_closed_loop_length_change_for_exact_kappa():
    res = parallel_transport_length_check(_structure(), LoopSpec.circle((0.5, 0.5, 0.5), 0.3, plane=(1, 2)), [1.0, 0.0, 0.0])
    assert abs(res.log_length_change) < 1e-9


def test_transport_validation():
    with pytest.raises(ValueError):
        parallel_transport_length_check(_structure(), LoopSpec.segment((0, 0, 0), (1, 1, 1)), [0.0, 0.0, 0.0])


def test_integration_failure():
    with pytest.raises(IntegrationFailure):
        _transport_segment(lambda t, v: v**2 * 1e3, np.array([1.0]), 1e-10)


# ---------------------------------------------------------------------------
# thermal model
# ---------------------------------------------------------------------------


def _model(beta="0.2 + 0.1*theta", theta="1 + X1 + 0.5*X3"):
    return ThermalModel.parse(beta, 1.0, theta)


@settings(max_examples=30)
@given(st.floats(0.0, 5.0))
def test_thermal_lambda_matches_closed_form(theta):
    tm = _model()
    expected = 2 * (0.2 * (theta - 1.0) + 0.05 * (theta**2 - 1.0))
    assert thermal_lambda(tm, theta) == pytest.approx(expected, rel=1e-12, abs=1e-14)
    assert characteristic_length(tm, theta, 2.0) == pytest.approx(2.0 * math.exp(expected / 2), rel=1e-12)


def test_thermal_weyl_structure_matches_rescaled_frame():
    tm = _model()
    frame = thermal_rescale_frame(holonomic(), tm)
    theta = 1 + P[0] + 0.5 * P[2]
    lam = thermal_lambda(tm, theta)
    np.testing.assert_allclose(metric_at(frame, P), math.exp(-lam) * np.eye(3), rtol=1e-13)
    w = tm.weyl_structure()
    np.testing.assert_allclose(weyl_connection_at(w, P).gamma, christoffel_at(frame, P).gamma, atol=1e-12)


def test_thermal_frame_jet_matches_finite_differences(rng):
    from dislogeo.oracles import fd_frame_first, fd_frame_second

    frame = thermal_rescale_frame(helical(0.6), _model())
    X = rng.uniform(0.1, 0.9, (4, 3))
    jet = frame.jet(X, 2)
    np.testing.assert_allclose(jet.dM, fd_frame_first(frame, X), atol=1e-8)
    np.testing.assert_allclose(jet.ddM, fd_frame_second(frame, X), atol=1e-8)
    assert np.all(np.isfinite(density_tensor_at(frame, P).alpha_frame))


def test_negative_temperature():
    with pytest.raises(NegativeTemperature):
        ThermalModel.parse("1", -1.0, "1")
    with pytest.raises(NegativeTemperature):
        thermal_lambda(_model(), -0.5)
    with pytest.raises(NegativeTemperature):
        thermal_rescale_frame(holonomic(), _model(theta="X1 - 0.5"))
