import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislogeo.errors import CriticalPoint, DegenerateDistribution, NonConstantAmbientCurvature, NonPositivePsi
from dislogeo.exprfield import BoxDomain, VectorField
from dislogeo.frame import conformal, equidistant, helical
from dislogeo.metric import killing_residual
from dislogeo.surfaces import (
    ConstantCurvatureSurface,
    Distribution2D,
    GeodesicFormMetric,
    UmbilicalFamily,
    ambient_scalar_curvature,
    gauss_relation_residual,
    gaussian_curvature_2d,
    induced_metric_at,
    involutivity_residual,
    level_surface_normal_check,
    lift_to_3d,
    mean_curvature,
    scalar_preserving_isometry_residual,
    second_fundamental_form,
)

P = (0.3, 0.6, 0.45)
CURVATURES = st.floats(-2.0, 2.0).filter(lambda k: abs(k) > 1e-3)


def test_coordinate_planes_are_involutive():
    assert involutivity_residual(Distribution2D.coordinate(1, 2), P) == 0.0


def test_frame_distributions():
    # E1, E2 of the equidistant frame span level sets of X3
    assert involutivity_residual(Distribution2D.from_frame(equidistant("0.4*X3")), P) < 1e-15
    # the helical frame twists: [E1, E2] = gamma E3 leaves span{E1, E2}
    gamma = 0.7
    assert involutivity_residual(Distribution2D.from_frame(helical(gamma)), P) == pytest.approx(gamma, rel=1e-14)


def test_degenerate_distribution():
    d = Distribution2D(VectorField.coordinate(1), VectorField.parse(["2", "0", "0"]))
    with pytest.raises(DegenerateDistribution):
        involutivity_residual(d, P)


def test_level_surface_normals():
    assert level_surface_normal_check(conformal("0.3*X3"), "X3^2 + 1", P) < 1e-15
    tilted = level_surface_normal_check(helical(0.5), "X1 + X3", P)
    assert tilted > 0.1
    with pytest.raises(CriticalPoint):
        level_surface_normal_check(helical(), "(X3 - 0.45)^2", P)


@pytest.mark.parametrize("k", [0.2, 0.7])
def test_equidistant_slices(k):
    u = UmbilicalFamily.from_h(f"{k}*X3")
    assert mean_curvature(u, 0.4) == pytest.approx(k, rel=1e-14)
    assert ambient_scalar_curvature(u.geodesic_form().ambient(), BoxDomain.unit()) == pytest.approx(-6 * k * k, rel=1e-12)
    assert gaussian_curvature_2d(u.geodesic_form().slice(0.4), (0.2, 0.3)) == pytest.approx(0.0, abs=1e-15)
    assert gauss_relation_residual(u, 0.4, (0.2, 0.3)) < 1e-14
    # umbilical: b = H a
    np.testing.assert_allclose(
        second_fundamental_form(u, 0.4, (0.2, 0.3)), k * math.exp(-2 * k * 0.4) * np.eye(2), rtol=1e-14
    )


def test_equidistant_frame_agrees_with_family():
    k = 0.3
    u = UmbilicalFamily.from_h(f"{k}*X3")
    from dislogeo.metric import metric_at

    g = metric_at(equidistant(f"{k}*X3"), P)
    np.testing.assert_allclose(g[:2, :2], induced_metric_at(u.geodesic_form(), P[2], P[:2]), rtol=1e-14)


def test_hyperbolic_space_foliated_by_curved_slices():
    # cosh^2(X3) a + dX3^2 with a of curvature -1 is hyperbolic space
    fam = UmbilicalFamily("0.25*(exp(X3) + exp(-X3))^2", _block(-1.0))
    assert mean_curvature(fam, 0.5) == pytest.approx(-math.tanh(0.5), rel=1e-14)
    assert ambient_scalar_curvature(fam.geodesic_form().ambient(), BoxDomain.unit()) == pytest.approx(-6.0, rel=1e-10)
    assert gauss_relation_residual(fam, 0.5, (0.1, 0.2)) < 1e-12


def test_nonconstant_ambient_curvature():
    u = UmbilicalFamily("1 + X3^2")
    with pytest.raises(NonConstantAmbientCurvature):
        gauss_relation_residual(u, 0.5, (0.1, 0.1))


def test_nonpositive_psi():
    with pytest.raises(NonPositivePsi):
        mean_curvature(UmbilicalFamily("X3 - 0.5"), 0.25)


def test_family_validation():
    with pytest.raises(ValueError):
        UmbilicalFamily("X1 + 1")
    with pytest.raises(ValueError):
        UmbilicalFamily("1", [["X3", "0"], ["0", "1"]])
    with pytest.raises(ValueError):
        GeodesicFormMetric([["1"]])


@settings(max_examples=20)
@given(CURVATURES, st.integers(0, 2**32 - 1))
def test_constant_curvature_surfaces(K, seed):
    surf = ConstantCurvatureSurface(K)
    Q = surf.sample(5, np.random.default_rng(seed))
    assert np.all(surf.admissible(Q))
    np.testing.assert_allclose(gaussian_curvature_2d(surf.metric, Q), K, rtol=1e-10, atol=1e-12)
    for u in surf.killing_fields():
        assert np.max(killing_residual(surf.metric, u, Q)) < 1e-11


def test_gaussian_curvature_of_list_metric():
    assert gaussian_curvature_2d([["1", "0"], ["0", "X1^2"]], (0.5, 0.3)) == pytest.approx(0.0, abs=1e-14)
    # round sphere of radius 2 in (theta, phi)
    assert gaussian_curvature_2d([["4", "0"], ["0", "4*sin(X1)^2"]], (1.0, 0.3)) == pytest.approx(0.25, rel=1e-13)


@pytest.mark.parametrize("K", [-1.0, 0.5])
def test_slice_isometries_lift(K):
    surf = ConstantCurvatureSurface(K)
    fam = UmbilicalFamily.from_h("0.3*X3", [[str(e) for e in row] for row in _block(K)])
    for u in surf.killing_fields():
        assert scalar_preserving_isometry_residual(fam.geodesic_form(), lift_to_3d(u), (0.2, -0.1 + 0.3, 0.4)) < 1e-13
    not_killing = VectorField.parse(["X1", "X2", "0"])
    assert scalar_preserving_isometry_residual(fam.geodesic_form(), not_killing, (0.2, 0.2, 0.4)) > 1e-3
    with pytest.raises(ValueError):
        lift_to_3d(not_killing)


def _block(K):
    conf = f"(1 + 0.25*{K!r}*(X1^2 + X2^2))^(-2)"
    return [[conf, "0"], ["0", conf]]
