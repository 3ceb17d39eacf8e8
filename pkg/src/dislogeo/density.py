"""Dislocation density tensor and the integral quantities built on it.

``alpha[..., b, a] = alpha^{ba} = eps * S_cd^a e^{cdb}`` (frame components) and
``alpha_mixed[..., B, a] = alpha^{Ba} = e_b^B alpha^{ba}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegeneratePatch, NegativeDensity
from .exprfield import BoxDomain, ExpressionField, field
from .frame import LoopSpec, MovingFrame, anholonomy_from_jet, develop_loop
from .metric import as_metric, check_positive_definite, divergence_from_jet
from .quadrature import LOOP_DEFAULT, PATCH_DEFAULT, VOLUME_DEFAULT, QuadratureSpec, fsum_columns

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0

CHUNK = 8192


@dataclass
class DensityTensor:
    alpha_frame: np.ndarray
    alpha_mixed: np.ndarray
    perm_frame: np.ndarray


@dataclass
class DensityDecomposition:
    gamma_sym: np.ndarray
    t: np.ndarray
    t_from_anholonomy: np.ndarray
    reconstruction_residual: float


@dataclass
class _Local:
    M: np.ndarray
    K: np.ndarray
    C: np.ndarray
    perm_up: np.ndarray
    perm_down: np.ndarray
    alpha: np.ndarray
    alpha_mixed: np.ndarray


def _local(frame: MovingFrame, X) -> _Local:
    jet = frame.jet(X, 1)
    M = jet.M
    K = frame.coframe(X, M)
    C = anholonomy_from_jet(K, M, jet.dM)
    S = -0.5 * C
    # g = det(g_AB) = det(K)^2
    sqrt_g = np.abs(np.linalg.det(K))
    e_up_coord = LEVI_CIVITA[None] / sqrt_g[:, None, None, None]
    e_down_coord = LEVI_CIVITA[None] * sqrt_g[:, None, None, None]
    perm_up = np.einsum("naA,nbB,ncC,nABC->nabc", K, K, K, e_up_coord, optimize=True)
    perm_down = np.einsum("naA,nbB,ncC,nABC->nabc", M, M, M, e_down_coord, optimize=True)
    alpha = frame.epsilon * np.einsum("ncda,ncdb->nba", S, perm_up)
    alpha_mixed = np.einsum("nbB,nba->nBa", M, alpha)
    return _Local(M, K, C, perm_up, perm_down, alpha, alpha_mixed)


def _unbatch(arr, single):
    return arr[0] if single else arr


def density_tensor_at(frame: MovingFrame, p) -> DensityTensor:
    X, single = frame.points(p)
    loc = _local(frame, X)
    return DensityTensor(_unbatch(loc.alpha, single), _unbatch(loc.alpha_mixed, single), _unbatch(loc.perm_up, single))


def decompose_density(frame: MovingFrame, p) -> DensityDecomposition:
    """Split ``alpha`` into its symmetric part ``gamma`` and the vector ``t_a = e_abc alpha^bc``."""
    X, single = frame.points(p)
    loc = _local(frame, X)
    eps = frame.epsilon
    gamma = 0.5 * (loc.alpha + loc.alpha.transpose(0, 2, 1))
    t = np.einsum("nabc,nbc->na", loc.perm_down, loc.alpha)
    t_check = eps * np.einsum("nabb->na", loc.C)
    delta = np.eye(3)
    rebuilt = 0.5 * (np.einsum("na,bc->nabc", t, delta) - np.einsum("nb,ac->nabc", t, delta))
    rebuilt -= np.einsum("nabd,ndc->nabc", loc.perm_down, gamma)
    residual = float(np.max(np.abs(eps * loc.C - rebuilt)))
    return DensityDecomposition(_unbatch(gamma, single), _unbatch(t, single), _unbatch(t_check, single), residual)


def self_balance_residual(frame: MovingFrame, p) -> np.ndarray:
    """``div_g E_a + C_ab^b`` for a = 1, 2, 3; vanishes identically."""
    X, single = frame.points(p)
    fj = frame.jet(X, 1)
    K = frame.coframe(X, fj.M)
    mj = as_metric(frame).jet(X, 1)
    ginv = np.einsum("naA,naB->nAB", fj.M, fj.M)
    C = anholonomy_from_jet(K, fj.M, fj.dM)
    out = np.empty((len(X), 3))
    for a in range(3):
        v = fj.M[:, a, :]
        dv = np.einsum("nBA->nAB", fj.dM[:, :, a, :])
        out[:, a] = divergence_from_jet(v, dv, ginv, mj.dg)
    out += np.einsum("nabb->na", C)
    return _unbatch(out, single)


def density_divergence_residual(frame: MovingFrame, p) -> np.ndarray:
    """``div_g alpha^a = g^-1/2 d_B (g^1/2 alpha^{Ba})`` assembled by the exact product rule."""
    X, single = frame.points(p)
    jet = frame.jet(X, 2)
    M, dM, ddM = jet.M, jet.dM, jet.ddM
    K = frame.coframe(X, M)
    Minv = np.linalg.inv(M)  # Minv[n, A, a]
    dMinv = -np.einsum("nAc,nkcB,nBb->nkAb", Minv, dM, Minv)
    dK = dMinv.transpose(0, 1, 3, 2)

    D = np.einsum("naB,nBbA->nabA", M, dM)
    dD = np.einsum("nkaB,nBbA->nkabA", dM, dM) + np.einsum("naB,nkBbA->nkabA", M, ddM)
    Br = D - D.transpose(0, 2, 1, 3)
    dBr = dD - dD.transpose(0, 1, 3, 2, 4)
    S = -0.5 * np.einsum("ncA,nabA->nabc", K, Br)
    dS = -0.5 * (np.einsum("nkcA,nabA->nkabc", dK, Br) + np.einsum("ncA,nkabA->nkabc", K, dBr))

    s = np.abs(np.linalg.det(M))  # g^-1/2, since g = det(K)^2
    dlog_detM = np.einsum("nAa,nkaA->nk", Minv, dM)
    ds = s[:, None] * dlog_detM
    KKK = np.einsum("naA,nbB,ncC,ABC->nabc", K, K, K, LEVI_CIVITA, optimize=True)
    dKKK = (
        np.einsum("nkaA,nbB,ncC,ABC->nkabc", dK, K, K, LEVI_CIVITA, optimize=True)
        + np.einsum("naA,nkbB,ncC,ABC->nkabc", K, dK, K, LEVI_CIVITA, optimize=True)
        + np.einsum("naA,nbB,nkcC,ABC->nkabc", K, K, dK, LEVI_CIVITA, optimize=True)
    )
    perm = s[:, None, None, None] * KKK
    dperm = ds[:, :, None, None, None] * KKK[:, None] + s[:, None, None, None, None] * dKKK

    eps = frame.epsilon
    alpha = eps * np.einsum("ncda,ncdb->nba", S, perm)
    dalpha = eps * (np.einsum("nkcda,ncdb->nkba", dS, perm) + np.einsum("ncda,nkcdb->nkba", S, dperm))
    dmixed = np.einsum("nkbB,nba->nkBa", dM, alpha) + np.einsum("nbB,nkba->nkBa", M, dalpha)
    mixed = np.einsum("nbB,nba->nBa", M, alpha)
    # d_B ln sqrt(g) = -d_B ln det M
    div = np.einsum("nBBa->na", dmixed) - np.einsum("nBa,nB->na", mixed, dlog_detM)
    return _unbatch(div, single)


# ---------------------------------------------------------------------------
# Surface integrals
# ---------------------------------------------------------------------------


class SurfacePatch:
    """Parametrised patch ``Sigma(u, v)`` over ``u_range x v_range`` (default the unit square).

    The oriented normal is ``d_u Sigma x d_v Sigma``; ``orientation=-1`` flips it.
    """

    def __init__(self, components: Sequence, params=None, orientation: int = 1, u_range=(0.0, 1.0), v_range=(0.0, 1.0)):
        comps = list(components)
        if len(comps) != 3:
            raise ValueError("a patch needs three coordinate expressions")
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.params = dict(params or {})
        self.components = tuple(field(c, self.params, ("u", "v")) for c in comps)
        self.orientation = orientation
        self.u_range = tuple(map(float, u_range))
        self.v_range = tuple(map(float, v_range))
        self._du = tuple(c.diff("u") for c in self.components)
        self._dv = tuple(c.diff("v") for c in self.components)

    @classmethod
    def parse(cls, x1, x2, x3, params=None, orientation=1):
        return cls([x1, x2, x3], params, orientation)

    @classmethod
    def parallelogram(cls, origin, edge_u, edge_v, orientation=1):
        o, eu, ev = (np.asarray(x, float) for x in (origin, edge_u, edge_v))
        comps = []
        for k in range(3):
            terms = [repr(float(o[k]))]
            if eu[k]:
                terms.append(f"{float(eu[k])!r}*u")
            if ev[k]:
                terms.append(f"{float(ev[k])!r}*v")
            comps.append(" + ".join(terms))
        return cls(comps, orientation=orientation)

    @classmethod
    def disk(cls, center, radius, plane=(1, 2), orientation=1):
        """Polar disk spanning :meth:`LoopSpec.circle` with the same orientation."""
        c = [float(x) for x in center]
        i, j = plane[0] - 1, plane[1] - 1
        comps = [repr(x) for x in c]
        comps[i] = f"{c[i]!r} + {float(radius)!r}*u*cos(2*pi*v)"
        comps[j] = f"{c[j]!r} + {float(radius)!r}*u*sin(2*pi*v)"
        return cls(comps, orientation=orientation)

    def restricted(self, u_range=None, v_range=None) -> "SurfacePatch":
        return SurfacePatch(self.components, self.params, self.orientation, u_range or self.u_range, v_range or self.v_range)

    def flipped(self) -> "SurfacePatch":
        return SurfacePatch(self.components, self.params, -self.orientation, self.u_range, self.v_range)

    def boundary(self) -> LoopSpec:
        """Boundary curve of the parameter rectangle, traversed counter-clockwise in (u, v)."""
        (u0, u1), (v0, v1) = self.u_range, self.v_range
        t = ExpressionField.variable("t", ("t",))
        edges = [(u0 + (u1 - u0) * t, v0 + 0 * t), (u1 + 0 * t, v0 + (v1 - v0) * t), (u1 - (u1 - u0) * t, v1 + 0 * t), (u0 + 0 * t, v1 - (v1 - v0) * t)]
        segs = [[c.substitute(("t",), u=eu, v=ev) for c in self.components] for eu, ev in edges]
        loop = LoopSpec(segs, self.params)
        return loop if self.orientation == 1 else loop.reversed()

    def nodes(self, quad: QuadratureSpec):
        U, V, W = quad.rule_2d((self.u_range, self.v_range))
        pts = np.stack([c(U, V) * np.ones_like(U) for c in self.components], axis=1)
        Tu = np.stack([d(U, V) * np.ones_like(U) for d in self._du], axis=1)
        Tv = np.stack([d(U, V) * np.ones_like(U) for d in self._dv], axis=1)
        return pts, Tu, Tv, W


def cube_boundary(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> list[SurfacePatch]:
    """Six faces of an axis-aligned box, each with outward normal ``d_u x d_v``."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    span = hi - lo
    faces = []
    for axis in range(3):
        i, j = (axis + 1) % 3, (axis + 2) % 3
        for side, value in ((1, hi[axis]), (-1, lo[axis])):
            origin = lo.copy()
            origin[axis] = value
            eu, ev = np.zeros(3), np.zeros(3)
            eu[i], ev[j] = span[i], span[j]
            # e_i x e_j = e_axis (cyclic); swap for the inward-facing side
            if side == 1:
                faces.append(SurfacePatch.parallelogram(origin, eu, ev))
            else:
                faces.append(SurfacePatch.parallelogram(origin, ev, eu))
    return faces


def _surface_contributions(frame: MovingFrame, pts, Tu, Tv, W):
    X, _ = frame.points(pts)
    loc = _local(frame, X)
    K, M = loc.K, loc.M
    g = np.einsum("naA,naB->nAB", K, K)
    ginv = np.einsum("naA,naB->nAB", M, M)
    sqrt_g = np.abs(np.linalg.det(K))
    a11 = np.einsum("nA,nAB,nB->n", Tu, g, Tu)
    a22 = np.einsum("nA,nAB,nB->n", Tv, g, Tv)
    a12 = np.einsum("nA,nAB,nB->n", Tu, g, Tv)
    det_a = a11 * a22 - a12**2
    bad = ~(det_a > 1e-20 * a11 * a22) | (a11 <= 0) | (a22 <= 0)
    if np.any(bad):
        raise DegeneratePatch("patch tangents are linearly dependent", X[np.argmax(bad)])
    dSigma = np.sqrt(det_a)
    l_low = sqrt_g[:, None] * np.einsum("ABC,nB,nC->nA", LEVI_CIVITA, Tu, Tv)
    norm = np.sqrt(np.einsum("nA,nAB,nB->n", l_low, ginv, l_low))
    l_low /= norm[:, None]
    l_frame = np.einsum("nbA,nA->nb", M, l_low)
    return np.einsum("nba,nb->na", loc.alpha, l_frame) * (dSigma * W)[:, None]


def burgers_via_surface(frame: MovingFrame, patch: SurfacePatch, quad: QuadratureSpec = PATCH_DEFAULT) -> np.ndarray:
    """``b^a = integral over the patch of alpha^{ba} l_b dSigma`` (Riemannian normal and area)."""
    pts, Tu, Tv, W = patch.nodes(quad)
    parts = [_surface_contributions(frame, pts[s : s + CHUNK], Tu[s : s + CHUNK], Tv[s : s + CHUNK], W[s : s + CHUNK]) for s in range(0, len(W), CHUNK)]
    return patch.orientation * fsum_columns(np.concatenate(parts))


def frank_vector(frame: MovingFrame, closed_surface: Sequence[SurfacePatch], quad: QuadratureSpec = PATCH_DEFAULT) -> np.ndarray:
    """Sum of surface Burgers vectors over an outward-oriented closed patchwork; vanishes identically."""
    parts = np.array([burgers_via_surface(frame, patch, quad) for patch in closed_surface])
    return fsum_columns(parts)


def stokes_check(frame: MovingFrame, loop: LoopSpec, patch: SurfacePatch, quad: QuadratureSpec = LOOP_DEFAULT, patch_quad: QuadratureSpec = PATCH_DEFAULT) -> float:
    """``|b(loop development) - b(surface integral)|``."""
    b_loop = develop_loop(frame, loop, quad).burgers
    b_surf = burgers_via_surface(frame, patch, patch_quad)
    return float(np.linalg.norm(b_loop - b_surf))


def total_length(rho, region: BoxDomain, g, quad: QuadratureSpec = VOLUME_DEFAULT) -> float:
    """Total dislocation line length ``integral of rho sqrt(g) dX1 dX2 dX3`` over ``region``."""
    g = as_metric(g)
    rho = field(rho)
    X, W = quad.rule_3d(region.lo_array, region.hi_array)
    vals = rho(*X.T) * np.ones(len(X))
    if np.any(vals < 0):
        raise NegativeDensity(f"scalar density is negative (min {vals.min():.3g})", X[np.argmin(vals)])
    jet = g.jet(X, 0)
    check_positive_definite(jet.g, X)
    vol = np.sqrt(np.linalg.det(jet.g))
    return float(fsum_columns(vals * vol * W))
