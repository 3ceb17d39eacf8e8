"""Weyl geometry of thermal distortion.

A Weyl structure is a metric ``g`` with a 1-form ``kappa`` and the symmetric
connection satisfying ``nabla_C g_AB = kappa_C g_AB``.  Lengths of parallel
vectors then change by ``d ln|v| = kappa(gamma') / 2``.  Heating by a
temperature field rescales the crystal frame by ``mu = exp(lambda(theta) / 2)``
with ``lambda(theta) = 2 * integral of beta from theta0 to theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import IntegrationFailure, NegativeTemperature
from .exprfield import COORDS, ExpressionField, as_points, field
from .frame import FrameJet, LoopSpec, MovingFrame
from .metric import (
    Connection,
    MetricField,
    as_metric,
    check_positive_definite,
    christoffel_from_jet,
    conformal_transform,
    covariant_derivative_of_metric,
)
from .quadrature import LOOP_DEFAULT, QuadratureSpec, fsum_columns

THETA = ("theta",)


class WeylStructure:
    """Metric ``g`` plus the 1-form ``kappa`` (optionally exact, ``kappa = d lam``)."""

    def __init__(self, g, kappa: Sequence | None = None, lam=None, params=None):
        self.g: MetricField = as_metric(g)
        self.params = dict(params or {})
        variables = getattr(self.g, "variables", COORDS[: self.g.dim])
        self.lam = None if lam is None else field(lam, self.params, variables)
        if kappa is None:
            if self.lam is None:
                kappa = [0.0] * self.g.dim
            else:
                kappa = [self.lam.diff(k + 1) for k in range(self.g.dim)]
        if len(kappa) != self.g.dim:
            raise ValueError(f"kappa needs {self.g.dim} components")
        self.kappa = tuple(field(k, self.params, variables) for k in kappa)

    @classmethod
    def exact(cls, g, lam, params=None) -> "WeylStructure":
        return cls(g, None, lam, params)

    def kappa_at(self, X):
        return np.stack([k(*X.T) * np.ones(len(X)) for k in self.kappa], axis=1)

    def connection_from_points(self, X):
        jet = self.g.jet(X, 1)
        check_positive_definite(jet.g, X)
        return _weyl_gamma(jet.g, jet.ginv, jet.dg, self.kappa_at(X)), jet


def _weyl_gamma(g, ginv, dg, kappa):
    n = g.shape[-1]
    delta = np.eye(n)
    k_up = np.einsum("nAD,nD->nA", ginv, kappa)
    corr = np.einsum("nB,AC->nABC", kappa, delta) + np.einsum("nC,AB->nABC", kappa, delta)
    corr -= np.einsum("nBC,nA->nABC", g, k_up)
    return christoffel_from_jet(ginv, dg) - 0.5 * corr


def weyl_connection_at(w: WeylStructure, p) -> Connection:
    """``Gamma^A_BC = LC^A_BC - (kappa_B delta^A_C + kappa_C delta^A_B - g_BC kappa^A) / 2``."""
    X, single = w.g.points(p)
    gamma, _ = w.connection_from_points(X)
    return Connection(gamma[0] if single else gamma)


def weyl_nonmetricity_residual(w: WeylStructure, p):
    """``max |nabla_C g_AB - kappa_C g_AB|`` per point."""
    X, single = w.g.points(p)
    gamma, jet = w.connection_from_points(X)
    Q = covariant_derivative_of_metric(gamma, jet.g, jet.dg)
    Q -= np.einsum("nC,nAB->nCAB", w.kappa_at(X), jet.g)
    out = np.abs(Q).reshape(len(X), -1).max(axis=1)
    return float(out[0]) if single else out


def weyl_compatibility_residual(w: WeylStructure, p):
    """``max |nabla_C (exp(-lam) g_AB)|``; requires an exact structure."""
    if w.lam is None:
        raise ValueError("compatibility needs kappa = d(lam); build the structure with WeylStructure.exact")
    X, single = w.g.points(p)
    gamma, jet = w.connection_from_points(X)
    lam = w.lam(*X.T) * np.ones(len(X))
    dlam = np.stack([w.lam.diff(k + 1)(*X.T) * np.ones(len(X)) for k in range(w.g.dim)], axis=1)
    f = np.exp(-lam)
    h = f[:, None, None] * jet.g
    dh = f[:, None, None, None] * (jet.dg - np.einsum("nk,nAB->nkAB", dlam, jet.g))
    Q = covariant_derivative_of_metric(gamma, h, dh)
    out = np.abs(Q).reshape(len(X), -1).max(axis=1)
    return float(out[0]) if single else out


def gauge_transform(w: WeylStructure, alpha) -> WeylStructure:
    """``(alpha g, kappa + d ln alpha)``: the same Weyl connection in another gauge."""
    variables = getattr(w.g, "variables", COORDS[: w.g.dim])
    alpha = field(alpha, w.params, variables)
    log_alpha = alpha.apply("log")
    g_new = conformal_transform(w.g, log_alpha * -0.5)
    kappa = [k + log_alpha.diff(i + 1) for i, k in enumerate(w.kappa)]
    lam = None if w.lam is None else w.lam + log_alpha
    return WeylStructure(g_new, kappa, lam, w.params)


def gauge_consistency_residual(w: WeylStructure, alpha, p):
    """``max |Gamma(g, kappa) - Gamma(alpha g, kappa + d ln alpha)|`` per point."""
    other = gauge_transform(w, alpha)
    a = np.asarray(weyl_connection_at(w, p).gamma)
    b = np.asarray(weyl_connection_at(other, p).gamma)
    diff = np.abs(a - b)
    return float(diff.max()) if diff.ndim == 3 else diff.reshape(len(diff), -1).max(axis=1)


def integrable_metric(w: WeylStructure) -> MetricField:
    """``exp(-lam) g``, whose Levi-Civita connection is the Weyl connection of an exact structure."""
    if w.lam is None:
        raise ValueError("needs an exact structure")
    return conformal_transform(w.g, w.lam * 0.5)


# ---------------------------------------------------------------------------
# Parallel transport
# ---------------------------------------------------------------------------


@dataclass
class TransportResult:
    final_vector: np.ndarray
    log_length_change: float
    predicted: float
    steps: int

    @property
    def discrepancy(self) -> float:
        return abs(self.log_length_change - self.predicted)


def _rk4_step(rhs, t, v, h):
    k1 = rhs(t, v)
    k2 = rhs(t + 0.5 * h, v + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, v + 0.5 * h * k2)
    k4 = rhs(t + h, v + h * k3)
    return v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _transport_segment(rhs, v, tol, h0=0.05, h_min=1e-10):
    """Classical RK4 on t in [0, 1] with step doubling and Richardson correction."""
    t, h, steps = 0.0, h0, 0
    while t < 1.0:
        h = min(h, 1.0 - t)
        full = _rk4_step(rhs, t, v, h)
        half = _rk4_step(rhs, t, v, 0.5 * h)
        half = _rk4_step(rhs, t + 0.5 * h, half, 0.5 * h)
        err = float(np.max(np.abs(half - full))) / 15.0
        if err <= tol:
            t += h
            v = half + (half - full) / 15.0
            steps += 1
            h *= min(2.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2)
        else:
            h *= max(0.2, 0.9 * (tol / err) ** 0.2)
            if h < h_min:
                raise IntegrationFailure(f"step size underflow at t = {t:.6g}")
    return v, steps


def parallel_transport_length_check(
    w: WeylStructure, curve: LoopSpec, v0, quad: QuadratureSpec = LOOP_DEFAULT, tol: float = 1e-10
) -> TransportResult:
    """Transport ``v0`` along ``curve`` with the Weyl connection.

    Returns the log of the length ratio ``l_g(v_end) / l_g(v_start)`` together
    with the independently quadratured prediction ``(1/2) integral of kappa``.
    """
    v = np.asarray(v0, dtype=float).copy()
    if v.shape != (w.g.dim,) or not np.any(v):
        raise ValueError("v0 must be a nonzero vector")
    total_steps = 0
    for seg, tangents in zip(curve.segments, curve._tangents):

        def rhs(t, vec, seg=seg, tangents=tangents):
            x = np.array([[c(t) for c in seg]])
            xdot = np.array([d(t) for d in tangents])
            gamma, _ = w.connection_from_points(x)
            return -np.einsum("ABC,B,C->A", gamma[0], xdot, vec)

        v, steps = _transport_segment(rhs, v, tol)
        total_steps += steps
    start = curve.start()[None]
    end = curve.end()[None]
    g0 = w.g.jet(start, 0).g[0]
    g1 = w.g.jet(end, 0).g[0]
    v_start = np.asarray(v0, dtype=float)
    log_change = 0.5 * (math.log(v @ g1 @ v) - math.log(v_start @ g0 @ v_start))
    pts, tan, wts = curve.nodes(quad)
    predicted = 0.5 * float(fsum_columns(np.einsum("nA,nA->n", w.kappa_at(pts), tan) * wts))
    return TransportResult(v, log_change, predicted, total_steps)


# ---------------------------------------------------------------------------
# Thermal model
# ---------------------------------------------------------------------------


@dataclass
class ThermalModel:
    """Expansion coefficient ``beta(theta)``, reference temperature and temperature field."""

    beta: ExpressionField
    theta0: float
    theta_field: ExpressionField

    def __post_init__(self):
        self.beta = field(self.beta, None, THETA)
        self.theta_field = field(self.theta_field)
        if self.theta0 < 0:
            raise NegativeTemperature(f"reference temperature {self.theta0} is negative")

    @classmethod
    def parse(cls, beta: str, theta0: float, theta: str, params=None) -> "ThermalModel":
        return cls(field(beta, params, THETA), float(theta0), field(theta, params))

    def temperature(self, X):
        theta = self.theta_field(*X.T) * np.ones(len(X))
        if np.any(theta < 0):
            raise NegativeTemperature(f"temperature field is negative (min {theta.min():.3g})")
        return theta

    def kappa(self) -> list[ExpressionField]:
        """``d lambda(theta(X)) = 2 beta(theta(X)) d theta`` as expressions."""
        beta_x = self.beta.substitute(COORDS, theta=self.theta_field)
        return [beta_x * 2.0 * self.theta_field.diff(k + 1) for k in range(3)]

    def weyl_structure(self, g=None) -> WeylStructure:
        from .metric import ExpressionMetric

        return WeylStructure(g if g is not None else ExpressionMetric.euclidean(), self.kappa())


def thermal_lambda(tm: ThermalModel, theta) -> float:
    """``lambda(theta) = 2 * integral of beta from theta0 to theta`` (adaptive quadrature)."""
    theta = float(theta)
    if theta < 0:
        raise NegativeTemperature(f"temperature {theta} is negative")
    if theta == tm.theta0:
        return 0.0
    val, _ = integrate.quad(lambda s: tm.beta(s), tm.theta0, theta, epsabs=1e-15, epsrel=1e-13, limit=200)
    return 2.0 * val


def characteristic_length(tm: ThermalModel, theta, l0: float = 1.0) -> float:
    """Length ``l(theta) = l0 exp(lambda(theta) / 2)`` solving ``dl/dtheta = beta l``."""
    return l0 * math.exp(0.5 * thermal_lambda(tm, theta))


class ThermalFrame(MovingFrame):
    """The frame ``mu(theta(X)) E_a``; derivatives follow from the chain rule."""

    def __init__(self, base: MovingFrame, model: ThermalModel):
        super().__init__(base.domain, base.epsilon, base.det_tolerance)
        self.base = base
        self.model = model
        self._dbeta = model.beta.diff("theta")

    def with_epsilon(self, epsilon):
        return ThermalFrame(self.base.with_epsilon(epsilon), self.model)

    def _mu(self, X):
        theta = self.model.temperature(X)
        uniq, inv = np.unique(theta, return_inverse=True)
        lam = np.array([thermal_lambda(self.model, t) for t in uniq])[inv.ravel()]
        return np.exp(0.5 * lam), theta

    def jet(self, X, order=0):
        bj = self.base.jet(X, order)
        mu, theta = self._mu(X)
        jet = FrameJet(mu[:, None, None] * bj.M)
        if order == 0:
            return jet
        tf = self.model.theta_field
        N = len(X)
        dtheta = np.stack([tf.diff(k + 1)(*X.T) * np.ones(N) for k in range(3)], axis=1)
        beta = self.model.beta(theta) * np.ones(N)
        dmu = (mu * beta)[:, None] * dtheta
        jet.dM = dmu[:, :, None, None] * bj.M[:, None] + mu[:, None, None, None] * bj.dM
        if order >= 2:
            dbeta = self._dbeta(theta) * np.ones(N)
            ddtheta = np.empty((N, 3, 3))
            for k in range(3):
                for l in range(3):
                    ddtheta[:, k, l] = tf.diff(k + 1).diff(l + 1)(*X.T)
            ddmu = mu[:, None, None] * (
                ((beta**2 + dbeta)[:, None, None]) * dtheta[:, :, None] * dtheta[:, None, :]
                + beta[:, None, None] * ddtheta
            )
            jet.ddM = (
                ddmu[:, :, :, None, None] * bj.M[:, None, None]
                + dmu[:, :, None, None, None] * bj.dM[:, None]
                + dmu[:, None, :, None, None] * bj.dM[:, :, None]
                + mu[:, None, None, None, None] * bj.ddM
            )
        return jet


def thermal_rescale_frame(frame: MovingFrame, tm: ThermalModel) -> MovingFrame:
    """``mu(theta(X)) E_a`` with ``mu = exp(lambda / 2)``; the metric scales by ``mu^-2``."""
    tm.temperature(frame.domain.grid(3))
    return ThermalFrame(frame, tm)
