"""Reference computations that avoid the jet machinery.

Derivatives come from central finite differences of the frame components and
contractions are written as explicit index loops, so agreement with the main
code is a genuine cross-check rather than a re-run of the same formulas.
"""

from __future__ import annotations

import itertools

import numpy as np

from .frame import MovingFrame

FD_STEP = 1e-5


def permutation_sign(i, j, k) -> int:
    return (i - j) * (j - k) * (k - i) // 2


def _frame_matrix(frame: MovingFrame, x) -> np.ndarray:
    return frame.jet(np.asarray(x, float)[None], 0).M[0]


def fd_frame_first(frame: MovingFrame, X, h=FD_STEP) -> np.ndarray:
    """``d_k e_a^A`` by central differences, shape (N, 3, 3, 3)."""
    X = np.atleast_2d(X)
    out = np.empty((len(X), 3, 3, 3))
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        out[:, k] = (frame.jet(X + step, 0).M - frame.jet(X - step, 0).M) / (2 * h)
    return out


def fd_frame_second(frame: MovingFrame, X, h=FD_STEP) -> np.ndarray:
    """``d_l d_k e_a^A`` as central differences of the analytic first derivatives."""
    X = np.atleast_2d(X)
    out = np.empty((len(X), 3, 3, 3, 3))
    for l in range(3):
        step = np.zeros(3)
        step[l] = h
        out[:, :, l] = (frame.jet(X + step, 1).dM - frame.jet(X - step, 1).dM) / (2 * h)
    return out


def brute_force_anholonomy(frame: MovingFrame, x, h=FD_STEP) -> np.ndarray:
    """``C_ab^c`` from ``[E_a, E_b]^A = E_a^B d_B E_b^A - E_b^B d_B E_a^A`` with FD derivatives."""
    x = np.asarray(x, float)
    M = _frame_matrix(frame, x)
    dM = fd_frame_first(frame, x[None], h)[0]
    K = np.linalg.inv(M).T
    C = np.zeros((3, 3, 3))
    for a, b, c in itertools.product(range(3), repeat=3):
        acc = 0.0
        for A in range(3):
            bracket = 0.0
            for B in range(3):
                bracket += M[a, B] * dM[B, b, A] - M[b, B] * dM[B, a, A]
            acc += K[c, A] * bracket
        C[a, b, c] = acc
    return C


def brute_force_density(frame: MovingFrame, x, h=FD_STEP) -> np.ndarray:
    """``alpha^{ba} = eps S_cd^a e^{cdb}`` with ``e^{ABC} = g^-1/2 eps^{ABC}`` pulled back to the frame."""
    x = np.asarray(x, float)
    C = brute_force_anholonomy(frame, x, h)
    S = -0.5 * C
    M = _frame_matrix(frame, x)
    K = np.linalg.inv(M).T
    g = np.zeros((3, 3))
    for A, B, a in itertools.product(range(3), repeat=3):
        g[A, B] += K[a, A] * K[a, B]
    inv_sqrt_g = 1.0 / np.sqrt(np.linalg.det(g))
    e_frame = np.zeros((3, 3, 3))
    for c, d, b in itertools.product(range(3), repeat=3):
        acc = 0.0
        for C_, D, B in itertools.permutations(range(3)):
            acc += K[c, C_] * K[d, D] * K[b, B] * permutation_sign(C_, D, B)
        e_frame[c, d, b] = acc * inv_sqrt_g
    alpha = np.zeros((3, 3))
    for b, a in itertools.product(range(3), repeat=2):
        alpha[b, a] = frame.epsilon * sum(S[c, d, a] * e_frame[c, d, b] for c in range(3) for d in range(3))
    return alpha


def simpson_burgers(frame: MovingFrame, vertices, n=2000) -> np.ndarray:
    """``eps * closed-loop integral of E^a`` around a polygon by composite Simpson per edge."""
    V = [np.asarray(v, float) for v in vertices]
    if n % 2:
        n += 1
    s = np.linspace(0.0, 1.0, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= 1.0 / (3 * n)
    total = np.zeros(3)
    for i in range(len(V)):
        a, b = V[i], V[(i + 1) % len(V)]
        pts = a[None] + s[:, None] * (b - a)[None]
        K = np.linalg.inv(frame.jet(pts, 0).M).transpose(0, 2, 1)
        total += np.einsum("n,naA,A->a", w, K, b - a)
    return frame.epsilon * total


def fd_derivative(f, x, k, h=FD_STEP) -> float:
    """Central difference of a scalar callable of three coordinates along axis ``k``."""
    x = np.asarray(x, float)
    step = np.zeros_like(x)
    step[k] = h
    return (f(*(x + step)) - f(*(x - step))) / (2 * h)
