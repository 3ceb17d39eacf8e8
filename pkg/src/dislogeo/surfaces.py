"""Crystal-plane distributions and the geometry of the surfaces they foliate.

A plane field spanned by two frame vectors is tested for integrability; when
the material metric is in geodesic form ``g = g_ab(X) dX^a dX^b + (dX^3)^2``
the slices ``X^3 = c`` are studied as 2-D Riemannian spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import CriticalPoint, DegenerateDistribution, NonConstantAmbientCurvature, NonPositivePsi
from .exprfield import COORDS, BoxDomain, ExpressionField, VectorField, as_points, field, lie_bracket
from .frame import ExpressionFrame, MovingFrame
from .metric import ExpressionMetric, MetricField, check_positive_definite, killing_residual, riemann_at

PLANE = COORDS[:2]
RANK_TOLERANCE = 1e-12


# ---------------------------------------------------------------------------
# Plane distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Distribution2D:
    first: VectorField
    second: VectorField

    @classmethod
    def from_frame(cls, frame: ExpressionFrame, rows=(1, 2)) -> "Distribution2D":
        fields = frame.vector_fields()
        return cls(fields[rows[0] - 1], fields[rows[1] - 1])

    @classmethod
    def coordinate(cls, i=1, j=2) -> "Distribution2D":
        return cls(VectorField.coordinate(i), VectorField.coordinate(j))


def involutivity_residual(d: Distribution2D, p):
    """Norm of the part of ``[E1, E2]`` outside ``span{E1, E2}`` (Euclidean least squares)."""
    X, single = as_points(p)
    bracket = lie_bracket(d.first, d.second)(X)
    span = np.stack([d.first(X), d.second(X)], axis=2)  # (N, 3, 2)
    sv = np.linalg.svd(span, compute_uv=False)
    bad = sv[:, 1] <= RANK_TOLERANCE * np.maximum(sv[:, 0], 1e-300)
    if np.any(bad):
        raise DegenerateDistribution("spanning fields are linearly dependent", X[np.argmax(bad)])
    out = np.empty(len(X))
    for n in range(len(X)):
        coef, *_ = np.linalg.lstsq(span[n], bracket[n], rcond=None)
        out[n] = np.linalg.norm(bracket[n] - span[n] @ coef)
    return float(out[0]) if single else out


def level_surface_normal_check(frame: MovingFrame, phi, p):
    """``max(|E1 phi|, |E2 phi|, angle(E3, grad_g phi))``; zero when E3 is normal to ``phi = const``."""
    phi = field(phi)
    X, single = frame.points(p)
    M = frame.jet(X, 0).M
    grad = np.stack([phi.diff(k + 1)(*X.T) * np.ones(len(X)) for k in range(3)], axis=1)
    norm = np.linalg.norm(grad, axis=1)
    if np.any(norm <= 1e-14):
        raise CriticalPoint("d(phi) vanishes", X[np.argmax(norm <= 1e-14)])
    Ephi = np.einsum("naA,nA->na", M, grad)
    # E_a is g-orthonormal, so E_a(phi) are the frame components of grad_g phi
    angle = np.arctan2(np.hypot(Ephi[:, 0], Ephi[:, 1]), np.abs(Ephi[:, 2]))
    out = np.maximum(np.maximum(np.abs(Ephi[:, 0]), np.abs(Ephi[:, 1])), angle)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# Geodesic-form metrics and umbilical families
# ---------------------------------------------------------------------------


class GeodesicFormMetric:
    """``g = g_ab(X1, X2, X3) dX^a dX^b + (dX^3)^2`` with a, b in {1, 2}."""

    def __init__(self, block: Sequence[Sequence], params=None, domain: BoxDomain | None = None):
        rows = [list(r) for r in block]
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("geodesic-form block must be 2x2")
        self.params = dict(params or {})
        self.block = tuple(tuple(field(rows[min(i, j)][max(i, j)], self.params) for j in range(2)) for i in range(2))
        self.domain = domain or BoxDomain.unit()

    def ambient(self) -> ExpressionMetric:
        zero, one = ExpressionField.constant(0.0), ExpressionField.constant(1.0)
        b = self.block
        return ExpressionMetric([[b[0][0], b[0][1], zero], [b[1][0], b[1][1], zero], [zero, zero, one]], self.params)

    def slice(self, c: float) -> ExpressionMetric:
        """Induced metric on ``X^3 = c`` as a 2-D metric in (X1, X2)."""
        return self.ambient().slice(3, c)


def induced_metric_at(gf: GeodesicFormMetric, c: float, q) -> np.ndarray:
    Q, single = as_points(q, 2)
    X = np.column_stack([Q, np.full(len(Q), float(c))])
    g = gf.ambient().jet(X, 0).g[:, :2, :2]
    return g[0] if single else g


@dataclass
class UmbilicalFamily:
    """``g_ab = Psi(X3) a_ab(X1, X2)``: every slice is umbilical with ``H = -Psi'/(2 Psi)``."""

    psi: ExpressionField
    a: tuple = dc_field(default=None)
    h: ExpressionField | None = None
    domain: BoxDomain = dc_field(default_factory=BoxDomain.unit)

    def __post_init__(self):
        self.psi = field(self.psi)
        if self.psi.depends_on(1) or self.psi.depends_on(2):
            raise ValueError("Psi must depend on X3 only")
        if self.a is None:
            self.a = ((1.0, 0.0), (0.0, 1.0))
        self.a = tuple(tuple(field(self.a[min(i, j)][max(i, j)]) for j in range(2)) for i in range(2))
        if any(self.a[i][j].depends_on(3) for i in range(2) for j in range(2)):
            raise ValueError("a_ab must not depend on X3")

    @classmethod
    def from_h(cls, h, a=None, scale=1.0, params=None, domain=None) -> "UmbilicalFamily":
        """``Psi = scale^2 exp(-2 h(X3))``."""
        hf = field(h, params)
        psi = (hf * -2.0).apply("exp") * float(scale) ** 2
        return cls(psi, a, hf, domain or BoxDomain.unit())

    def geodesic_form(self) -> GeodesicFormMetric:
        block = [[self.psi * self.a[i][j] for j in range(2)] for i in range(2)]
        return GeodesicFormMetric(block, domain=self.domain)

    def psi_at(self, c):
        val = self.psi(0.0, 0.0, float(c))
        if not val > 0:
            raise NonPositivePsi(f"Psi({c}) = {val:.3g} is not positive")
        return val


def mean_curvature(u: UmbilicalFamily, c: float, q=None) -> float:
    """``H_c = -d3 Psi / (2 Psi)`` at ``X^3 = c`` (independent of ``q`` on an umbilical slice)."""
    psi = u.psi_at(c)
    dpsi = u.psi.diff(3)(0.0, 0.0, float(c))
    return -dpsi / (2.0 * psi)


def second_fundamental_form(u: UmbilicalFamily, c: float, q) -> np.ndarray:
    """``b_ab = H_c a_c,ab`` for the umbilical slice."""
    return mean_curvature(u, c) * induced_metric_at(u.geodesic_form(), c, q)


def _metric_2d(a) -> MetricField:
    if isinstance(a, MetricField):
        if a.dim != 2:
            raise ValueError("expected a 2-D metric")
        return a
    return ExpressionMetric(a, variables=PLANE)


def gaussian_curvature_2d(a, q):
    """Gaussian curvature ``K = R / 2`` of a 2-D metric."""
    report = riemann_at(_metric_2d(a), q)
    return 0.5 * report.scalar


# ---------------------------------------------------------------------------
# Constant-curvature slices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantCurvatureSurface:
    """``(1 + K r^2 / 4)^-2 (dX1^2 + dX2^2)``, defined where ``1 + K r^2 / 4 > 0``."""

    curvature: float

    @property
    def metric(self) -> ExpressionMetric:
        return constant_curvature_metric(self.curvature)

    def killing_fields(self) -> list[VectorField]:
        return constant_curvature_killing_fields(self.curvature)

    def admissible(self, q, margin=0.0):
        Q, _ = as_points(q, 2)
        return 1.0 + 0.25 * self.curvature * np.sum(Q**2, axis=1) > margin

    def sample(self, n, rng, radius=1.0):
        """``n`` admissible points in the disk of ``radius`` (clipped to the chart)."""
        if self.curvature < 0:
            radius = min(radius, 0.9 * 2.0 / np.sqrt(-self.curvature))
        r = radius * np.sqrt(rng.random(n))
        t = 2 * np.pi * rng.random(n)
        return np.column_stack([r * np.cos(t), r * np.sin(t)])


def constant_curvature_metric(K: float) -> ExpressionMetric:
    conf = "(1 + 0.25*K*(X1^2 + X2^2))^(-2)"
    return ExpressionMetric([[conf, "0"], ["0", conf]], {"K": float(K)}, PLANE)


def constant_curvature_killing_fields(K: float) -> list[VectorField]:
    """Two curved translations and the rotation ``X2 d1 - X1 d2``."""
    params = {"K": float(K)}
    radial = "(1 - 0.25*K*(X1^2 + X2^2))"
    u1 = VectorField.parse([f"{radial} + 0.5*K*X1*X1", "0.5*K*X1*X2"], params, PLANE)
    u2 = VectorField.parse(["0.5*K*X2*X1", f"{radial} + 0.5*K*X2*X2"], params, PLANE)
    u3 = VectorField.parse(["X2", "-X1"], None, PLANE)
    return [u1, u2, u3]


def lift_to_3d(u: VectorField) -> VectorField:
    """Tangential 2-D field ``(u1, u2)`` viewed as ``(u1, u2, 0)`` on every slice."""
    if u.dim != 2:
        raise ValueError("expected a 2-D vector field")
    return VectorField([c.with_variables(COORDS) for c in u.components] + [ExpressionField.constant(0.0)])


def scalar_preserving_isometry_residual(gf: GeodesicFormMetric, u: VectorField, p) -> float:
    """Max violation of the conditions for ``u`` to preserve both the slices and ``X^3``.

    Checks the Killing equation on the slice through ``p``, ``d3 u^a = 0``,
    ``u^a d_a g33 = 0`` and ``u^3 = 0``.
    """
    if u.dim != 3:
        raise ValueError("u must have three components (use lift_to_3d for slice fields)")
    X, _ = as_points(p)
    x = X[0]
    c = float(x[2])
    tangential = VectorField([comp.substitute(PLANE, X3=c) for comp in u.components[:2]])
    k2d = killing_residual(gf.slice(c), tangential, x[:2])
    jac = u.jacobian(x)
    d3 = float(np.max(np.abs(jac[:2, 2])))
    dg33 = gf.ambient().jet(X, 1).dg[0, :2, 2, 2]
    vals = u(x)
    transverse = abs(float(np.dot(vals[:2], dg33)))
    return max(float(k2d), d3, transverse, abs(float(vals[2])))


def ambient_scalar_curvature(g: MetricField, domain: BoxDomain, samples=20, tol=1e-6, seed=0) -> float:
    """Scalar curvature, after verifying it is constant over ``samples`` random points."""
    X = domain.sample(samples, np.random.default_rng(seed))
    scalar = np.atleast_1d(riemann_at(g, X).scalar)
    spread = float(np.max(scalar) - np.min(scalar))
    if spread > tol:
        raise NonConstantAmbientCurvature(f"scalar curvature varies by {spread:.3g} over the domain")
    return float(np.mean(scalar))


def gauss_relation_residual(u: UmbilicalFamily, c: float, q) -> float:
    """``|K_c - H_c^2 - K_g|`` with ``K_g`` the ambient sectional curvature (scalar / 6)."""
    gf = u.geodesic_form()
    ambient = gf.ambient()
    K_g = ambient_scalar_curvature(ambient, u.domain) / 6.0
    X = np.array([[q[0], q[1], c]], dtype=float)
    check_positive_definite(ambient.jet(X, 0).g, X)
    K_c = gaussian_curvature_2d(gf.slice(c), q)
    H = mean_curvature(u, c)
    return abs(K_c - H * H - K_g)
