"""Riemannian metrics on the material body and their derived objects.

A :class:`MetricField` produces, at a batch of points, the metric together
with its first and second coordinate derivatives (a "jet").  Everything else
(Christoffel symbols, curvature, divergence, strain) is assembled from the
jet, so derivatives are exact rather than finite-differenced.

Index layout: ``g[n, A, B]``, ``dg[n, k, A, B] = d_k g_AB``,
``ddg[n, k, l, A, B]``; connections ``Gamma[n, A, B, C] = Gamma^A_BC``;
Riemann ``R[n, A, B, C, D] = R^A_BCD`` with

    R^A_BCD = d_C Gamma^A_BD - d_D Gamma^A_BC + Gamma^A_CE Gamma^E_BD - Gamma^A_DE Gamma^E_BC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite
from .exprfield import COORDS, ExpressionField, VectorField, as_points, field
from .frame import MovingFrame

PIVOT_TOLERANCE = 1e-12


@dataclass
class MetricJet:
    g: np.ndarray
    dg: np.ndarray | None = None
    ddg: np.ndarray | None = None

    @property
    def ginv(self):
        return np.linalg.inv(self.g)


class MetricField:
    dim = 3

    def jet(self, X, order=0) -> MetricJet:
        raise NotImplementedError

    def points(self, p):
        return as_points(p, self.dim)


class ExpressionMetric(MetricField):
    """Metric given directly by symmetric component expressions."""

    def __init__(self, entries, params=None, variables=None):
        rows = [list(r) for r in entries]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("metric entries must form a square matrix")
        self.dim = n
        self.variables = tuple(variables or COORDS[:n])
        if len(self.variables) != n:
            raise ValueError(f"{n}x{n} metric needs {n} coordinates")
        self.params = dict(params or {})
        self.entries = tuple(
            tuple(field(rows[min(i, j)][max(i, j)], self.params, self.variables) for j in range(n)) for i in range(n)
        )

    @classmethod
    def from_upper(cls, values, params=None):
        """3-D metric from ``(g11, g12, g13, g22, g23, g33)``."""
        g11, g12, g13, g22, g23, g33 = values
        return cls([[g11, g12, g13], [g12, g22, g23], [g13, g23, g33]], params)

    @classmethod
    def euclidean(cls, dim=3):
        return cls([[1.0 if i == j else 0.0 for j in range(dim)] for i in range(dim)])

    def _eval(self, f, X):
        if f.is_zero:
            return 0.0
        return f(*X.T)

    def jet(self, X, order=0):
        n, N = self.dim, X.shape[0]
        g = np.empty((N, n, n))
        for i in range(n):
            for j in range(n):
                g[:, i, j] = self._eval(self.entries[i][j], X)
        jet = MetricJet(g)
        if order >= 1:
            dg = np.empty((N, n, n, n))
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        dg[:, k, i, j] = self._eval(self.entries[i][j].diff(k + 1), X)
            jet.dg = dg
        if order >= 2:
            ddg = np.empty((N, n, n, n, n))
            for k in range(n):
                for l in range(n):
                    for i in range(n):
                        for j in range(n):
                            ddg[:, k, l, i, j] = self._eval(self.entries[i][j].diff(k + 1).diff(l + 1), X)
            jet.ddg = ddg
        return jet

    def slice(self, axis: int, value: float) -> "ExpressionMetric":
        """Restrict to the coordinate slice ``X^axis = value`` (drops that coordinate)."""
        var = self.variables[axis - 1]
        keep = [i for i in range(self.dim) if i != axis - 1]
        new_vars = tuple(self.variables[i] for i in keep)
        rows = [[self.entries[i][j].substitute(new_vars, **{var: value}) for j in keep] for i in keep]
        return ExpressionMetric(rows, self.params, new_vars)


class FrameMetric(MetricField):
    """Intrinsic material metric ``g_AB = delta_ab e^a_A e^b_B`` of a frame.

    The inverse metric ``g^AB = sum_a e_a^A e_a^B`` is polynomial in the
    frame components, so its derivatives come straight from the frame jet.
    """

    def __init__(self, frame: MovingFrame):
        self.frame = frame

    def jet(self, X, order=0):
        fj = self.frame.jet(X, order)
        M = fj.M
        self.frame.coframe(X, M)
        G = np.einsum("naA,naB->nAB", M, M)
        g = np.linalg.inv(G)
        jet = MetricJet(g)
        if order >= 1:
            t = np.einsum("nkaA,naB->nkAB", fj.dM, M)
            dG = t + t.transpose(0, 1, 3, 2)
            dg = -np.einsum("nAP,nkPQ,nQB->nkAB", g, dG, g)
            jet.dg = dg
        if order >= 2:
            t2 = np.einsum("nklaA,naB->nklAB", fj.ddM, M)
            cross = np.einsum("nkaA,nlaB->nklAB", fj.dM, fj.dM)
            ddG = t2 + t2.transpose(0, 1, 2, 4, 3) + cross + cross.transpose(0, 2, 1, 3, 4)
            ddg = -(
                np.einsum("nlAP,nkPQ,nQB->nklAB", dg, dG, g)
                + np.einsum("nAP,nklPQ,nQB->nklAB", g, ddG, g)
                + np.einsum("nAP,nkPQ,nlQB->nklAB", g, dG, dg)
            )
            jet.ddg = ddg
        return jet


class ConformalMetric(MetricField):
    """``exp(-2 sigma) g`` for a base metric without closed-form components."""

    def __init__(self, base: MetricField, sigma: ExpressionField):
        self.base = base
        self.dim = base.dim
        self.sigma = sigma

    def jet(self, X, order=0):
        bj = self.base.jet(X, order)
        n = self.dim
        s = self.sigma(*X.T) * np.ones(X.shape[0])
        phi = np.exp(-2.0 * s)
        jet = MetricJet(phi[:, None, None] * bj.g)
        if order >= 1:
            ds = np.stack([self.sigma.diff(k + 1)(*X.T) * np.ones(X.shape[0]) for k in range(n)], axis=1)
            dphi = -2.0 * ds * phi[:, None]
            jet.dg = dphi[:, :, None, None] * bj.g[:, None] + phi[:, None, None, None] * bj.dg
        if order >= 2:
            dds = np.empty((X.shape[0], n, n))
            for k in range(n):
                for l in range(n):
                    dds[:, k, l] = self.sigma.diff(k + 1).diff(l + 1)(*X.T)
            ddphi = (4.0 * ds[:, :, None] * ds[:, None, :] - 2.0 * dds) * phi[:, None, None]
            jet.ddg = (
                ddphi[:, :, :, None, None] * bj.g[:, None, None]
                + dphi[:, :, None, None, None] * bj.dg[:, None]
                + dphi[:, None, :, None, None] * bj.dg[:, :, None]
                + phi[:, None, None, None, None] * bj.ddg
            )
        return jet


def as_metric(g) -> MetricField:
    if isinstance(g, MetricField):
        return g
    if isinstance(g, MovingFrame):
        return FrameMetric(g)
    raise TypeError(f"cannot interpret {type(g).__name__} as a metric")


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------


@dataclass
class Connection:
    gamma: np.ndarray


@dataclass
class CurvatureReport:
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray | float
    max_abs_riemann: float


@dataclass
class StrainTensor:
    eps: np.ndarray


# ---------------------------------------------------------------------------
# Jet algebra (batched)
# ---------------------------------------------------------------------------


def check_positive_definite(g, X):
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        bad = np.array([np.any(np.linalg.eigvalsh(gi) <= 0) for gi in g])
        raise NotPositiveDefinite("metric is not positive definite", X[np.argmax(bad)]) from None
    piv = np.diagonal(L, axis1=1, axis2=2) ** 2
    small = np.any(piv <= PIVOT_TOLERANCE, axis=1)
    if np.any(small):
        raise NotPositiveDefinite("Cholesky pivot below tolerance", X[np.argmax(small)])


def christoffel_from_jet(ginv, dg):
    T = np.einsum("nBDC->nDBC", dg) + np.einsum("nCDB->nDBC", dg) - dg
    return 0.5 * np.einsum("nAD,nDBC->nABC", ginv, T)


def christoffel_derivative_from_jet(ginv, dg, ddg):
    """``dGamma[n, E, A, B, C] = d_E Gamma^A_BC``."""
    T = np.einsum("nBDC->nDBC", dg) + np.einsum("nCDB->nDBC", dg) - dg
    dT = np.einsum("nEBDC->nEDBC", ddg) + np.einsum("nECDB->nEDBC", ddg) - ddg
    dginv = -np.einsum("nAP,nEPQ,nQD->nEAD", ginv, dg, ginv)
    return 0.5 * (np.einsum("nEAD,nDBC->nEABC", dginv, T) + np.einsum("nAD,nEDBC->nEABC", ginv, dT))


def riemann_from_connection(gamma, dgamma):
    R = np.einsum("nCABD->nABCD", dgamma) - np.einsum("nDABC->nABCD", dgamma)
    R += np.einsum("nACE,nEBD->nABCD", gamma, gamma) - np.einsum("nADE,nEBC->nABCD", gamma, gamma)
    return R


def covariant_derivative_of_metric(gamma, g, dg):
    """``Q[n, C, A, B] = nabla_C g_AB`` for an arbitrary connection."""
    return dg - np.einsum("nDCA,nDB->nCAB", gamma, g) - np.einsum("nDCB,nAD->nCAB", gamma, g)


def log_sqrt_det_gradient(ginv, dg):
    """``d_A ln sqrt(det g)``."""
    return 0.5 * np.einsum("nBC,nACB->nA", ginv, dg)


def divergence_from_jet(v, dv, ginv, dg):
    """``g^-1/2 d_A (g^1/2 v^A)`` from ``v[n, A]`` and ``dv[n, A, B] = d_B v^A``."""
    return np.einsum("nAA->n", dv) + np.einsum("nA,nA->n", v, log_sqrt_det_gradient(ginv, dg))


def strain_from_jet(u, du, g, dg, gamma):
    """``eps_AB = (nabla_A u_B + nabla_B u_A) / 2`` with ``du[n, C, A] = d_A u^C``."""
    u_low = np.einsum("nBC,nC->nB", g, u)
    d_ulow = np.einsum("nABC,nC->nAB", dg, u) + np.einsum("nBC,nCA->nAB", g, du)
    nabla = d_ulow - np.einsum("nCAB,nC->nAB", gamma, u_low)
    return 0.5 * (nabla + nabla.transpose(0, 2, 1))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def _unbatch(arr, single):
    return arr[0] if single else arr


def _jet(g: MetricField, p, order):
    X, single = g.points(p)
    jet = g.jet(X, order)
    check_positive_definite(jet.g, X)
    return X, single, jet


def metric_at(frame: MovingFrame, p) -> np.ndarray:
    """``g_AB = delta_ab e^a_A e^b_B`` at ``p``."""
    X, single = frame.points(p)
    K = frame.coframe(X)
    return _unbatch(np.einsum("naA,naB->nAB", K, K), single)


def christoffel_at(g, p) -> Connection:
    g = as_metric(g)
    X, single, jet = _jet(g, p, 1)
    return Connection(_unbatch(christoffel_from_jet(jet.ginv, jet.dg), single))


def metric_compatibility_residual(g, p) -> np.ndarray:
    """``max |nabla_C g_AB|`` for the Levi-Civita connection, per point."""
    g = as_metric(g)
    X, single, jet = _jet(g, p, 1)
    gamma = christoffel_from_jet(jet.ginv, jet.dg)
    Q = covariant_derivative_of_metric(gamma, jet.g, jet.dg)
    return _unbatch(np.abs(Q).reshape(len(X), -1).max(axis=1), single)


def riemann_at(g, p) -> CurvatureReport:
    g = as_metric(g)
    X, single, jet = _jet(g, p, 2)
    ginv = jet.ginv
    gamma = christoffel_from_jet(ginv, jet.dg)
    dgamma = christoffel_derivative_from_jet(ginv, jet.dg, jet.ddg)
    R = riemann_from_connection(gamma, dgamma)
    ricci = np.einsum("nABAD->nBD", R)
    scalar = np.einsum("nBD,nBD->n", ginv, ricci)
    return CurvatureReport(
        _unbatch(R, single),
        _unbatch(ricci, single),
        float(scalar[0]) if single else scalar,
        float(np.max(np.abs(R))),
    )


def bianchi_residual(report: CurvatureReport) -> float:
    """``max |R^A_BCD + R^A_CDB + R^A_DBC|`` (first Bianchi identity)."""
    R = report.riemann
    cyc = R + np.einsum("...ACDB->...ABCD", R) + np.einsum("...ADBC->...ABCD", R)
    return float(np.max(np.abs(cyc)))


def divergence_at(g, v: VectorField, p):
    """``div_g v = g^-1/2 d_A (g^1/2 v^A)``."""
    g = as_metric(g)
    X, single, jet = _jet(g, p, 1)
    vals = v(X)
    dv = v.jacobian(X)
    return _unbatch(divergence_from_jet(vals, dv, jet.ginv, jet.dg), single)


def strain_at(g, u: VectorField, p) -> StrainTensor:
    g = as_metric(g)
    X, single, jet = _jet(g, p, 1)
    gamma = christoffel_from_jet(jet.ginv, jet.dg)
    eps = strain_from_jet(u(X), u.jacobian(X), jet.g, jet.dg, gamma)
    return StrainTensor(_unbatch(eps, single))


def killing_residual(g, u: VectorField, p):
    """Frobenius norm of ``nabla_A u_B + nabla_B u_A``; zero for Killing fields."""
    eps = strain_at(g, u, p).eps
    return np.linalg.norm(2.0 * eps, axis=(-2, -1)) if eps.ndim == 3 else float(np.linalg.norm(2.0 * eps))


def conformal_transform(g, sigma) -> MetricField:
    """``exp(-2 sigma) g``; symbolic when ``g`` has expression components."""
    g = as_metric(g)
    variables = getattr(g, "variables", COORDS[: g.dim])
    sigma = field(sigma, None, variables)
    if isinstance(g, ExpressionMetric):
        factor = (sigma * -2.0).apply("exp")
        rows = [[factor * g.entries[i][j] for j in range(g.dim)] for i in range(g.dim)]
        return ExpressionMetric(rows, g.params, g.variables)
    return ConformalMetric(g, sigma)
