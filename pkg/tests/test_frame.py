import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislogeo.errors import NonPositiveDeterminant, OpenLoop, OutsideDomain, SingularFrame
from dislogeo.exprfield import BoxDomain, lie_bracket
from dislogeo.frame import (
    ExpressionFrame,
    LoopSpec,
    anholonomy_at,
    anholonomy_tensor_at,
    catalog_frame,
    coframe_at,
    conformal,
    develop_loop,
    equidistant,
    glide_decomposition_check,
    helical,
    holonomic,
    metric_from_plastic,
    perturbed_frame,
    plastic_distortion_at,
    rescale_frame,
)
from dislogeo.metric import metric_at
from dislogeo.oracles import brute_force_anholonomy, fd_frame_first, fd_frame_second, simpson_burgers
from dislogeo.quadrature import QuadratureSpec

P = (0.3, 0.6, 0.45)
SEEDS = st.integers(0, 2**32 - 1)


def test_coframe_is_dual_to_frame(rng):
    frame = perturbed_frame(rng)
    X = rng.uniform(0, 1, (20, 3))
    M = frame.jet(X).M
    K = coframe_at(frame, X)
    np.testing.assert_allclose(np.einsum("naA,nbA->nab", K, M), np.broadcast_to(np.eye(3), (20, 3, 3)), atol=1e-14)


def test_holonomic_frame_has_no_anholonomy():
    assert np.all(anholonomy_at(holonomic(), P).C == 0)


def test_helical_structure_constants():
    gamma = 0.7
    C = anholonomy_at(helical(gamma), P).C
    expected = np.zeros((3, 3, 3))
    expected[0, 1, 2], expected[1, 0, 2] = gamma, -gamma
    expected[0, 2, 1], expected[2, 0, 1] = -gamma, gamma
    np.testing.assert_allclose(C, expected, atol=1e-15)


def test_conformal_brackets():
    # E_a = exp(k X3) d_a: [E_a, E_3] = -k exp(k X3) E_a for a = 1, 2
    k = 0.4
    C = anholonomy_at(conformal(f"{k}*X3"), P).C
    rate = -k * math.exp(k * P[2])
    assert C[0, 2, 0] == pytest.approx(rate, rel=1e-14) and C[1, 2, 1] == pytest.approx(rate, rel=1e-14)
    assert C[0, 1].tolist() == [0.0, 0.0, 0.0]


def test_anholonomy_matches_symbolic_brackets(rng):
    frame = perturbed_frame(rng, amplitude=0.3)
    fields = frame.vector_fields()
    C = anholonomy_at(frame, P).C
    M = frame.jet(np.array([P])).M[0]
    for a in range(3):
        for b in range(3):
            np.testing.assert_allclose(lie_bracket(fields[a], fields[b])(P), C[a, b] @ M, atol=1e-13)


@settings(max_examples=15)
@given(SEEDS)
def test_anholonomy_matches_finite_difference_oracle(seed):
    frame = perturbed_frame(np.random.default_rng(seed), amplitude=0.3)
    x = np.random.default_rng(seed + 1).uniform(0.1, 0.9, 3)
    C = anholonomy_at(frame, x).C
    assert np.max(np.abs(C - brute_force_anholonomy(frame, x))) <= 1e-8


def test_jets_match_finite_differences(rng):
    frame = perturbed_frame(rng, amplitude=0.3)
    X = rng.uniform(0.1, 0.9, (5, 3))
    jet = frame.jet(X, 2)
    np.testing.assert_allclose(jet.dM, fd_frame_first(frame, X), atol=1e-9)
    np.testing.assert_allclose(jet.ddM, fd_frame_second(frame, X), atol=1e-9)


def test_anholonomy_tensor_coordinate_components():
    t = anholonomy_tensor_at(helical(0.5), P)
    np.testing.assert_allclose(t.S, -0.5 * anholonomy_at(helical(0.5), P).C)
    assert t.S_coord.shape == (3, 3, 3)
    np.testing.assert_allclose(t.S_coord, -np.swapaxes(t.S_coord, 0, 1), atol=1e-15)


def test_singular_frame_reports_point():
    frame = ExpressionFrame([["X1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    with pytest.raises(SingularFrame) as info:
        coframe_at(frame, [[0.5, 0.5, 0.5], [0.0, 0.2, 0.3]])
    np.testing.assert_array_equal(info.value.point, [0.0, 0.2, 0.3])


def test_outside_domain():
    with pytest.raises(OutsideDomain):
        anholonomy_at(helical(), (1.5, 0.0, 0.0))
    big = helical(domain=BoxDomain.from_bounds((-2, -2, -2), (2, 2, 2)))
    anholonomy_at(big, (1.5, 0.0, 0.0))


def test_epsilon_must_be_a_sign():
    with pytest.raises(ValueError):
        helical(epsilon=0)


def test_catalog_lookup():
    assert catalog_frame("F1", gamma=0.2).params["gamma"] == 0.2
    with pytest.raises(ValueError):
        catalog_frame("F9")


@settings(max_examples=15)
@given(SEEDS)
def test_constant_mixing_leaves_anholonomy_tensorial(seed):
    r = np.random.default_rng(seed)
    frame = perturbed_frame(r, amplitude=0.3)
    L = np.eye(3) + 0.3 * r.standard_normal((3, 3))
    if np.linalg.det(L) <= 0.05:
        L[:, 0] *= -1
    if np.linalg.det(L) <= 0.05:
        return
    mixed = rescale_frame(frame, L)
    C = anholonomy_at(frame, P).C
    Linv = np.linalg.inv(L)
    expected = np.einsum("ad,be,abc,fc->def", L, L, C, Linv)
    np.testing.assert_allclose(anholonomy_at(mixed, P).C, expected, atol=1e-12)


def test_rescale_rejects_orientation_reversal():
    with pytest.raises(NonPositiveDeterminant):
        rescale_frame(helical(), np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        rescale_frame(helical(), np.eye(2))


def test_plastic_distortion_recovers_metric(rng):
    frame = perturbed_frame(rng)
    P_ = plastic_distortion_at(frame, P).P
    np.testing.assert_allclose(metric_from_plastic(P_), metric_at(frame, P), atol=1e-14)


def test_glide_decomposition():
    ok, mu = glide_decomposition_check(equidistant("0.3*X3"), P)
    assert ok
    np.testing.assert_allclose(mu, [math.exp(0.3 * 0.45)] * 2 + [1.0])
    assert glide_decomposition_check(helical(0.5), P) == (False, None)


# ---------------------------------------------------------------------------
# loops
# ---------------------------------------------------------------------------

SQUARE = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)]


@pytest.mark.parametrize("epsilon", [1, -1])
def test_helical_square_burgers(epsilon):
    gamma = 0.8
    b = develop_loop(helical(gamma, epsilon=epsilon), LoopSpec.polygon(SQUARE)).burgers
    np.testing.assert_allclose(b, epsilon * np.array([0.0, math.cos(gamma) - 1, -math.sin(gamma)]), atol=1e-14)


def test_holonomic_loops_close():
    dev = develop_loop(holonomic(), LoopSpec.circle((0.5, 0.5, 0.5), 0.3))
    assert np.max(np.abs(dev.burgers)) < 1e-15
    assert np.max(np.abs(dev.points[-1])) < 1e-15


@settings(max_examples=10)
@given(SEEDS)
def test_burgers_matches_simpson_oracle(seed):
    frame = perturbed_frame(np.random.default_rng(seed), amplitude=0.3)
    verts = [(0.1, 0.2, 0.3), (0.8, 0.3, 0.2), (0.7, 0.9, 0.6), (0.2, 0.7, 0.5)]
    b = develop_loop(frame, LoopSpec.polygon(verts)).burgers
    assert np.max(np.abs(b - simpson_burgers(frame, verts))) < 1e-10


def test_reversed_loop_negates_burgers(rng):
    frame = perturbed_frame(rng, amplitude=0.3)
    loop = LoopSpec.circle((0.5, 0.5, 0.5), 0.35, plane=(2, 3))
    b = develop_loop(frame, loop).burgers
    np.testing.assert_allclose(develop_loop(frame, loop.reversed()).burgers, -b, atol=1e-15)


def test_open_loop_rejected():
    with pytest.raises(OpenLoop):
        develop_loop(helical(), LoopSpec.segment((0, 0, 0), (1, 0, 0)))
    with pytest.raises(OpenLoop):
        develop_loop(helical(), LoopSpec.parse("t; 1", "0; t", "0; 0"))


def test_parsed_loop_segments():
    loop = LoopSpec.parse("t; 1; 1-t; 0", "0; t; 1; 1-t", "0; 0; 0; 0")
    assert loop.closure_gap() == 0.0
    b = develop_loop(helical(0.8), loop, QuadratureSpec(8, 8)).burgers
    np.testing.assert_allclose(b, [0.0, math.cos(0.8) - 1, -math.sin(0.8)], atol=1e-14)
    with pytest.raises(ValueError):
        LoopSpec.parse("t; 1", "0", "0; 0")
