"""Bravais moving frames: coframe, anholonomy, rescaling, plastic distortion, loop development.

Frame matrices follow one layout throughout: ``M[..., a, A] = e_a^A`` (row =
frame label, column = coordinate), and the coframe ``K[..., a, A] = e^a_A`` so
that ``K @ M.T`` is the identity.  Derivatives are stacked with the
differentiation axis first: ``dM[..., k, a, A] = d_k e_a^A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonPositiveDeterminant, OpenLoop, OutsideDomain, SingularFrame
from .exprfield import COORDS, BoxDomain, ExpressionField, VectorField, as_points, field
from .quadrature import LOOP_DEFAULT, QuadratureSpec, fsum_columns

DET_TOLERANCE = 1e-10


@dataclass
class FrameJet:
    """Frame components and their first/second coordinate derivatives at N points."""

    M: np.ndarray
    dM: np.ndarray | None = None
    ddM: np.ndarray | None = None


class MovingFrame:
    """Triad of vector fields ``E_a = e_a^A d_A`` on a box domain.

    Subclasses provide :meth:`jet`.  ``epsilon`` is the Burgers orientation
    sign (+1 or -1).
    """

    name = "frame"

    def __init__(self, domain: BoxDomain | None = None, epsilon: int = 1, det_tolerance: float = DET_TOLERANCE):
        if epsilon not in (1, -1):
            raise ValueError(f"epsilon must be +1 or -1, got {epsilon}")
        self.domain = domain or BoxDomain.unit()
        self.epsilon = int(epsilon)
        self.det_tolerance = det_tolerance

    def jet(self, X: np.ndarray, order: int = 0) -> FrameJet:
        raise NotImplementedError

    def with_epsilon(self, epsilon: int) -> "MovingFrame":
        raise NotImplementedError

    def points(self, p, check_domain=True):
        X, single = as_points(p)
        if check_domain:
            inside = self.domain.contains(X)
            if not np.all(inside):
                raise OutsideDomain(f"point outside frame domain {self.domain}", X[np.argmin(inside)])
        return X, single

    def coframe(self, X, M=None):
        """Coframe at points ``X`` (already validated), raising SingularFrame."""
        if M is None:
            M = self.jet(X).M
        det = np.linalg.det(M)
        bad = np.abs(det) <= self.det_tolerance
        if np.any(bad):
            raise SingularFrame(f"|det e_a^A| = {abs(det[bad][0]):.3e} below tolerance {self.det_tolerance}", X[np.argmax(bad)])
        return np.linalg.inv(M).transpose(0, 2, 1)


class ExpressionFrame(MovingFrame):
    """Frame whose nine components are closed-form expressions."""

    def __init__(self, entries, params=None, domain=None, epsilon=1, name="custom", det_tolerance=DET_TOLERANCE):
        super().__init__(domain, epsilon, det_tolerance)
        rows = [list(r) for r in entries]
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("frame needs a 3x3 array of component expressions")
        self.params = dict(params or {})
        self.entries = tuple(tuple(field(e, self.params) for e in r) for r in rows)
        self.name = name
        self._d1 = None
        self._d2 = None

    def with_epsilon(self, epsilon):
        return ExpressionFrame(self.entries, self.params, self.domain, epsilon, self.name, self.det_tolerance)

    def vector_fields(self) -> list[VectorField]:
        return [VectorField(row) for row in self.entries]

    def _derivatives(self):
        if self._d1 is None:
            self._d1 = [[[e.diff(k + 1) for e in row] for row in self.entries] for k in range(3)]
            self._d2 = [[[[e.diff(l + 1) for e in row] for row in self._d1[k]] for l in range(3)] for k in range(3)]
        return self._d1, self._d2

    @staticmethod
    def _fill(out, f, X):
        if f.is_zero:
            out[:] = 0.0
        else:
            out[:] = f(X[:, 0], X[:, 1], X[:, 2])

    def jet(self, X, order=0):
        N = X.shape[0]
        M = np.empty((N, 3, 3))
        for a in range(3):
            for A in range(3):
                self._fill(M[:, a, A], self.entries[a][A], X)
        jet = FrameJet(M)
        if order >= 1:
            d1, d2 = self._derivatives()
            dM = np.empty((N, 3, 3, 3))
            for k in range(3):
                for a in range(3):
                    for A in range(3):
                        self._fill(dM[:, k, a, A], d1[k][a][A], X)
            jet.dM = dM
        if order >= 2:
            ddM = np.empty((N, 3, 3, 3, 3))
            for k in range(3):
                for l in range(3):
                    for a in range(3):
                        for A in range(3):
                            self._fill(ddM[:, k, l, a, A], d2[k][l][a][A], X)
            jet.ddM = ddM
        return jet

    def texts(self):
        return [[str(e) for e in row] for row in self.entries]


class RescaledFrame(MovingFrame):
    """``E'_b = E_a L^a_b`` for a frame without closed-form components."""

    def __init__(self, base: MovingFrame, L):
        super().__init__(base.domain, base.epsilon, base.det_tolerance)
        self.base = base
        self.L = np.asarray(L, dtype=float)
        self.name = f"{base.name}*L"

    def with_epsilon(self, epsilon):
        return RescaledFrame(self.base.with_epsilon(epsilon), self.L)

    def jet(self, X, order=0):
        j = self.base.jet(X, order)
        LT = self.L.T
        return FrameJet(
            np.einsum("ba,naA->nbA", LT, j.M),
            None if j.dM is None else np.einsum("ba,nkaA->nkbA", LT, j.dM),
            None if j.ddM is None else np.einsum("ba,nklaA->nklbA", LT, j.ddM),
        )


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


def holonomic(domain=None, epsilon=1) -> ExpressionFrame:
    """F0: the coordinate frame ``E_a = d_a``."""
    eye = [[1.0 if a == A else 0.0 for A in range(3)] for a in range(3)]
    return ExpressionFrame(eye, domain=domain, epsilon=epsilon, name="holonomic")


def helical(gamma=0.5, domain=None, epsilon=1) -> ExpressionFrame:
    """F1: lattice planes twisting about X1 with rate ``gamma``.

    Brackets: [E1,E2] = gamma E3, [E1,E3] = -gamma E2, [E2,E3] = 0.
    """
    entries = [
        ["1", "0", "0"],
        ["0", "cos(gamma*X1)", "sin(gamma*X1)"],
        ["0", "-sin(gamma*X1)", "cos(gamma*X1)"],
    ]
    return ExpressionFrame(entries, {"gamma": gamma}, domain, epsilon, name="helical")


def conformal(sigma="0.3*X3", params=None, domain=None, epsilon=1) -> ExpressionFrame:
    """F2: ``E_a = exp(sigma) d_a``, i.e. coframe ``exp(-sigma) dX^a``."""
    scale = field(sigma, params).apply("exp")
    zero = ExpressionField.constant(0.0)
    entries = [[scale if a == A else zero for A in range(3)] for a in range(3)]
    return ExpressionFrame(entries, params, domain, epsilon, name="conformal")


def equidistant(h="0.3*X3", params=None, scale=1.0, domain=None, epsilon=1) -> ExpressionFrame:
    """F3: ``E_alpha = Psi^(-1/2) d_alpha``, ``E_3 = d_3`` with ``Psi = scale^2 exp(-2h(X3))``."""
    hf = field(h, params)
    if hf.depends_on(1) or hf.depends_on(2):
        raise ValueError("h must depend on X3 only")
    inv_sqrt_psi = hf.apply("exp") / float(scale)
    zero, one = ExpressionField.constant(0.0), ExpressionField.constant(1.0)
    entries = [[inv_sqrt_psi, zero, zero], [zero, inv_sqrt_psi, zero], [zero, zero, one]]
    return ExpressionFrame(entries, params, domain, epsilon, name="equidistant")


_MONOMIALS = ("X1", "X2", "X3", "X1*X1", "X2*X2", "X3*X3", "X1*X2", "X2*X3", "X1*X3")


def perturbed_frame(rng: np.random.Generator, amplitude=0.1, domain=None, epsilon=1) -> ExpressionFrame:
    """Identity plus random quadratic polynomials; ``amplitude`` bounds each entry's perturbation on the unit box."""
    scale = amplitude / len(_MONOMIALS)
    entries = []
    for a in range(3):
        row = []
        for A in range(3):
            coef = rng.uniform(-scale, scale, len(_MONOMIALS))
            terms = [repr(1.0 if a == A else 0.0)] + [f"{float(c)!r}*{m}" for c, m in zip(coef, _MONOMIALS)]
            row.append(" + ".join(terms))
        entries.append(row)
    return ExpressionFrame(entries, domain=domain, epsilon=epsilon, name="perturbed")


CATALOG = {
    "holonomic": holonomic,
    "F0": holonomic,
    "helical": helical,
    "F1": helical,
    "conformal": conformal,
    "F2": conformal,
    "equidistant": equidistant,
    "F3": equidistant,
}


def catalog_frame(name: str, **kwargs) -> ExpressionFrame:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown catalog frame {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(**kwargs)


# ---------------------------------------------------------------------------
# Pointwise operations
# ---------------------------------------------------------------------------


@dataclass
class AnholonomyObject:
    """``C[..., a, b, c] = C_ab^c`` with ``[E_a, E_b] = C_ab^c E_c``."""

    C: np.ndarray


@dataclass
class AnholonomyTensor:
    S: np.ndarray
    S_coord: np.ndarray


@dataclass
class PlasticDistortion:
    P: np.ndarray


def brackets_from_jet(M, dM):
    """``B[..., a, b, A] = [E_a, E_b]^A`` from frame components and first derivatives."""
    # u^B d_B v^A with u = E_a, v = E_b
    D = np.einsum("naB,nBbA->nabA", M, dM)
    return D - D.transpose(0, 2, 1, 3)


def anholonomy_from_jet(K, M, dM):
    B = brackets_from_jet(M, dM)
    C = np.einsum("ncA,nabA->nabc", K, B)
    return 0.5 * (C - C.transpose(0, 2, 1, 3))


def _unbatch(arr, single):
    return arr[0] if single else arr


def coframe_at(frame: MovingFrame, p) -> np.ndarray:
    X, single = frame.points(p)
    return _unbatch(frame.coframe(X), single)


def anholonomy_at(frame: MovingFrame, p) -> AnholonomyObject:
    X, single = frame.points(p)
    jet = frame.jet(X, 1)
    K = frame.coframe(X, jet.M)
    return AnholonomyObject(_unbatch(anholonomy_from_jet(K, jet.M, jet.dM), single))


def anholonomy_tensor_at(frame: MovingFrame, p) -> AnholonomyTensor:
    X, single = frame.points(p)
    jet = frame.jet(X, 1)
    K = frame.coframe(X, jet.M)
    S = -0.5 * anholonomy_from_jet(K, jet.M, jet.dM)
    S_coord = np.einsum("naA,nbB,ncC,nabc->nABC", K, K, jet.M, S)
    return AnholonomyTensor(_unbatch(S, single), _unbatch(S_coord, single))


def rescale_frame(frame: MovingFrame, L) -> MovingFrame:
    """Constant mixing ``E'_b = E_a L^a_b`` with ``det L > 0``."""
    L = np.asarray(L, dtype=float)
    if L.shape != (3, 3):
        raise ValueError("L must be a 3x3 matrix")
    det = np.linalg.det(L)
    if not det > 0:
        raise NonPositiveDeterminant(f"det L = {det:.6g} is not positive")
    if isinstance(frame, ExpressionFrame):
        entries = []
        for b in range(3):
            row = []
            for A in range(3):
                acc = ExpressionField.constant(0.0)
                for a in range(3):
                    if L[a, b] != 0:
                        acc = acc + frame.entries[a][A] * float(L[a, b])
                row.append(acc)
            entries.append(row)
        return ExpressionFrame(entries, frame.params, frame.domain, frame.epsilon, f"{frame.name}*L", frame.det_tolerance)
    return RescaledFrame(frame, L)


def plastic_distortion_at(frame: MovingFrame, p) -> PlasticDistortion:
    """``P^A_B = e_b^A delta^b_B``, with the external Cartesian basis aligned to the chart."""
    X, single = frame.points(p)
    M = frame.jet(X).M
    frame.coframe(X, M)
    return PlasticDistortion(_unbatch(M.transpose(0, 2, 1).copy(), single))


def metric_from_plastic(P) -> np.ndarray:
    """``g = P* c P^-1`` with ``c`` the Euclidean metric and ``P* = (P^-1)^T``."""
    Pinv = np.linalg.inv(P)
    return np.swapaxes(Pinv, -1, -2) @ Pinv


def glide_decomposition_check(frame: MovingFrame, p, angle_tol=1e-8):
    """Is every ``E_a`` a positive multiple of ``d_a``?  Returns (is_glide, mu or None)."""
    X, single = frame.points(p)
    if not single:
        raise ValueError("glide_decomposition_check expects a single point")
    M = frame.jet(X).M
    frame.coframe(X, M)
    M = M[0]
    mu = []
    for a in range(3):
        along = M[a, a]
        off = math.sqrt(sum(M[a, A] ** 2 for A in range(3) if A != a))
        if math.atan2(off, along) > angle_tol:
            return False, None
        mu.append(float(along))
    return True, np.array(mu)


# ---------------------------------------------------------------------------
# Loops and development
# ---------------------------------------------------------------------------


class LoopSpec:
    """Piecewise parametrised curve: one or more segments, each an expression triple in t on [0, 1].

    Segments are traversed in order.  A loop must close (last end == first
    start); the same class describes open paths for parallel transport.
    """

    def __init__(self, segments: Sequence[Sequence], params=None):
        segs = []
        for seg in segments:
            seg = list(seg)
            if len(seg) != 3:
                raise ValueError("each segment needs three coordinate expressions")
            segs.append(tuple(field(s, params, ("t",)) for s in seg))
        if not segs:
            raise ValueError("a curve needs at least one segment")
        self.segments = tuple(segs)
        self.params = dict(params or {})
        self._tangents = tuple(tuple(c.diff("t") for c in seg) for seg in self.segments)

    @classmethod
    def parse(cls, x1: str, x2: str, x3: str, params=None):
        """Components given as ';'-separated segment lists, e.g. ``x1 = "t; 1; 1-t; 0"``."""
        parts = [[s.strip() for s in str(x).split(";")] for x in (x1, x2, x3)]
        if len({len(p) for p in parts}) != 1:
            raise ValueError("all three components need the same number of segments")
        return cls(list(zip(*parts)), params)

    @classmethod
    def polygon(cls, vertices):
        """Closed polygon through ``vertices`` (first vertex is not repeated)."""
        V = [np.asarray(v, dtype=float) for v in vertices]
        segs = []
        for i in range(len(V)):
            a, b = V[i], V[(i + 1) % len(V)]
            segs.append([_affine(a[k], b[k] - a[k]) for k in range(3)])
        return cls(segs)

    @classmethod
    def segment(cls, start, end):
        a, b = np.asarray(start, float), np.asarray(end, float)
        return cls([[_affine(a[k], b[k] - a[k]) for k in range(3)]])

    @classmethod
    def circle(cls, center, radius, plane=(1, 2)):
        """Counter-clockwise circle in the coordinate plane ``(X^i, X^j)``."""
        c = [float(v) for v in center]
        i, j = plane[0] - 1, plane[1] - 1
        comps = [repr(v) for v in c]
        comps[i] = f"{c[i]!r} + {float(radius)!r}*cos(2*pi*t)"
        comps[j] = f"{c[j]!r} + {float(radius)!r}*sin(2*pi*t)"
        return cls([comps])

    def reversed(self) -> "LoopSpec":
        """Same curve traversed backwards (t -> 1 - t)."""
        one_minus_t = ExpressionField.variable("t", ("t",))
        one_minus_t = 1.0 - one_minus_t
        segs = [tuple(c.substitute(t=one_minus_t) for c in seg) for seg in reversed(self.segments)]
        return LoopSpec(segs, self.params)

    def _eval(self, seg, t):
        return np.stack([c(t) for c in self.segments[seg]], axis=-1)

    def start(self):
        return self._eval(0, np.array([0.0]))[0]

    def end(self):
        return self._eval(len(self.segments) - 1, np.array([1.0]))[0]

    def continuity_gap(self) -> float:
        gap = 0.0
        for s in range(len(self.segments) - 1):
            e = self._eval(s, np.array([1.0]))[0]
            b = self._eval(s + 1, np.array([0.0]))[0]
            gap = max(gap, float(np.max(np.abs(e - b))))
        return gap

    def closure_gap(self) -> float:
        return max(self.continuity_gap(), float(np.max(np.abs(self.end() - self.start()))))

    def check_closed(self, tol=1e-12):
        gap = self.closure_gap()
        if gap > tol:
            raise OpenLoop(f"curve does not close: gap {gap:.3e} exceeds {tol:g}")

    def nodes(self, quad: QuadratureSpec):
        """Quadrature nodes along all segments: points, tangents d(gamma)/dt, weights."""
        t, w = quad.rule()
        pts, tan, wts = [], [], []
        for s, seg in enumerate(self.segments):
            pts.append(self._eval(s, t))
            tan.append(np.stack([d(t) for d in self._tangents[s]], axis=-1))
            wts.append(w)
        return np.concatenate(pts), np.concatenate(tan), np.concatenate(wts)

    def sample(self, n_per_segment=33):
        ts = np.linspace(0.0, 1.0, n_per_segment)
        return np.concatenate([self._eval(s, ts) for s in range(len(self.segments))])


def _affine(a, d):
    if d == 0:
        return repr(float(a))
    return f"{float(a)!r} + {float(d)!r}*t"


@dataclass
class DevelopedLoop:
    points: np.ndarray
    burgers: np.ndarray


def develop_loop(frame: MovingFrame, loop: LoopSpec, quad: QuadratureSpec = LOOP_DEFAULT) -> DevelopedLoop:
    """Develop ``loop`` into flat space along the frame; returns the polyline and ``b^a = eps * loop-integral of E^a``.

    The developed curve is reported at panel boundaries, starting at the origin.
    """
    loop.check_closed()
    pts, tan, w = loop.nodes(quad)
    X, _ = frame.points(pts)
    K = frame.coframe(X)
    gdot = np.einsum("naA,nA->na", K, tan)
    contrib = gdot * w[:, None]
    per_panel = contrib.reshape(-1, quad.nodes, 3).sum(axis=1)
    developed = np.vstack([np.zeros(3), np.cumsum(per_panel, axis=0)])
    total = fsum_columns(contrib)
    return DevelopedLoop(developed, frame.epsilon * total)
