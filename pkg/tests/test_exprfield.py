import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dislogeo.errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifier
from dislogeo.exprfield import (
    BoxDomain,
    ExpressionField,
    Point,
    VectorField,
    as_points,
    jacobi_residual,
    lie_bracket,
    parse_expression,
)
from dislogeo.oracles import fd_derivative


def test_precedence_and_unary_minus():
    f = parse_expression("-X1^2 + 2*X2/4 - X3")
    assert f(3.0, 2.0, 1.0) == pytest.approx(-9 + 1 - 1)
    assert parse_expression("2^3^2")(0, 0, 0) == 2**9
    assert parse_expression("(1 - X1) - X2")(1.0, 1.0, 0) == -1.0
    assert parse_expression("1 - (X1 - X2)")(1.0, 1.0, 0) == 1.0


def test_params_functions_and_pi():
    f = parse_expression("a*sin(pi*X1) + exp(0) + sqrt(X2) + log(X3) + tanh(0)", {"a": 2.0})
    assert f(0.5, 4.0, 1.0) == pytest.approx(2.0 + 1.0 + 2.0)


@pytest.mark.parametrize(
    "text, position",
    [("1 +", 3), ("X1 ** 2", 4), ("(X1 + 2", 7), ("2 $ 3", 2), ("sin X1", 4), ("", 0)],
)
def test_syntax_errors_carry_position(text, position):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression(text)
    assert info.value.position == position


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        parse_expression("X1 + bogus")
    assert info.value.name == "bogus" and info.value.position == 5
    with pytest.raises(UnknownIdentifier):
        parse_expression("foo(X1)")


@pytest.mark.parametrize("text, point", [("1/X1", (0, 1, 1)), ("log(X1)", (0, 1, 1)), ("sqrt(X1)", (-1, 0, 0)), ("X1^(-1)", (0, 1, 1)), ("X1^0.5", (-2, 0, 0))])
def test_domain_errors(text, point):
    with pytest.raises(EvaluationError):
        parse_expression(text)(*point)


def test_vectorised_evaluation_and_constants_broadcast():
    X = np.random.default_rng(0).random((7, 3))
    assert parse_expression("2").at(X).shape == (7,)
    np.testing.assert_allclose(parse_expression("X1*X2 + X3").at(X), X[:, 0] * X[:, 1] + X[:, 2])
    assert parse_expression("X1").at(Point(0.25, 0, 0)) == 0.25


def test_fields_are_immutable():
    f = parse_expression("X1")
    with pytest.raises(AttributeError):
        f.tree = None


def test_substitute_and_variables():
    f = parse_expression("u*v + X3", variables=("u", "v", "X3"))
    g = f.substitute(("t",), u=parse_expression("t", variables=("t",)), v=2.0, X3=1.0)
    assert g(3.0) == 7.0
    assert not parse_expression("X2 + 3").depends_on(1)


def test_points_and_domain():
    X, single = as_points((1, 2, 3))
    assert single and X.shape == (1, 3)
    box = BoxDomain.from_bounds((0, 0, 0), (1, 2, 3))
    assert box.contains([[0.5, 1.9, 2.9], [1.5, 0, 0]]).tolist() == [True, False]
    assert box.grid(3).shape == (27, 3)
    with pytest.raises(ValueError):
        BoxDomain.from_bounds((0, 0, 0), (1, 0, 1))


# ---------------------------------------------------------------------------
# random expressions
# ---------------------------------------------------------------------------

LEAVES = st.sampled_from(["X1", "X2", "X3", "0.5", "2", "1.25", "a"])


def _combine(children):
    binary = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})")
    quotient = st.tuples(children).map(lambda t: f"{t[0]} / (2 + X1^2)")
    power = st.tuples(children, st.integers(2, 3)).map(lambda t: f"({t[0]})^{t[1]}")
    func = st.tuples(st.sampled_from(["sin", "cos", "tanh"]), children).map(lambda t: f"{t[0]}({t[1]})")
    expo = st.tuples(children).map(lambda t: f"exp(0.3*{t[0]})")
    neg = children.map(lambda c: f"-{c}")
    return st.one_of(binary, quotient, power, func, expo, neg)


EXPRESSIONS = st.recursive(LEAVES, _combine, max_leaves=8)
POINTS = st.tuples(*[st.floats(0.1, 0.9) for _ in range(3)])
PARAMS = {"a": 0.7}


@given(EXPRESSIONS, POINTS)
def test_print_parse_round_trip(text, point):
    f = parse_expression(text, PARAMS)
    again = parse_expression(str(f), PARAMS)
    assert str(again) == str(f)
    assert again(*point) == pytest.approx(f(*point), rel=1e-12, abs=1e-12)


@given(EXPRESSIONS, POINTS, st.integers(1, 3))
def test_symbolic_derivative_matches_central_difference(text, point, axis):
    f = parse_expression(text, PARAMS)
    exact = f.diff(axis)(*point)
    approx = fd_derivative(f, point, axis - 1)
    assert abs(exact - approx) <= 1e-6 * max(1.0, abs(exact))


@given(EXPRESSIONS, POINTS, st.integers(1, 3), st.integers(1, 3))
def test_mixed_partials_commute(text, point, i, j):
    f = parse_expression(text, PARAMS)
    a = f.diff(i).diff(j)(*point)
    b = f.diff(j).diff(i)(*point)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


def _vector(texts):
    return VectorField.parse(texts, PARAMS)


VECTORS = st.tuples(EXPRESSIONS, EXPRESSIONS, EXPRESSIONS).map(_vector)


@given(VECTORS, VECTORS, POINTS)
def test_bracket_antisymmetric(u, v, point):
    np.testing.assert_allclose(lie_bracket(u, v)(point), -lie_bracket(v, u)(point), rtol=1e-10, atol=1e-10)


@given(VECTORS, VECTORS, VECTORS, POINTS)
def test_jacobi_identity(u, v, w, point):
    res = jacobi_residual(u, v, w, point)
    scale = max(1.0, float(np.max(np.abs(lie_bracket(u, lie_bracket(v, w))(point)))))
    assert np.max(np.abs(res)) <= 1e-7 * scale


def test_coordinate_fields_commute():
    e1, e2 = VectorField.coordinate(1), VectorField.coordinate(2)
    assert np.all(lie_bracket(e1, e2)((0.3, 0.2, 0.1)) == 0)


def test_rotation_bracket():
    # [X2 d1 - X1 d2, d1] = d2
    rot = VectorField.parse(["X2", "-X1", "0"])
    np.testing.assert_allclose(lie_bracket(rot, VectorField.coordinate(1))((0.4, 0.1, 0.0)), [0, 1, 0])


def test_arithmetic_on_fields():
    x = ExpressionField.variable("X1")
    f = (2 * x + 1) / (x - 3) ** 2
    assert f(1.0, 0, 0) == pytest.approx(3 / 4)
    assert (-x).apply("exp")(0.0, 0, 0) == 1.0
    assert math.isclose((1 - x)(0.25, 0, 0), 0.75)
