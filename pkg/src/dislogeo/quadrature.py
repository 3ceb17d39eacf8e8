"""Composite Gauss-Legendre rules on the unit interval, square and box."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _legendre(nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return x, w


@dataclass(frozen=True)
class QuadratureSpec:
    """``panels`` equal sub-intervals per axis, ``nodes`` Gauss points per panel."""

    panels: int = 64
    nodes: int = 8
    atol: float = 1e-10

    def __post_init__(self):
        if self.panels < 1:
            raise ValueError(f"panels must be >= 1, got {self.panels}")
        if not 2 <= self.nodes <= 16:
            raise ValueError(f"nodes per panel must be in 2..16, got {self.nodes}")

    def refined(self, factor: int) -> "QuadratureSpec":
        return replace(self, panels=self.panels * factor)

    def rule(self, a=0.0, b=1.0):
        """Nodes and weights on ``[a, b]``, ordered increasingly."""
        x, w = _legendre(self.nodes)
        h = (b - a) / self.panels
        left = a + h * np.arange(self.panels)
        xs = (left[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
        ws = np.tile(0.5 * h * w, self.panels)
        return xs, ws

    def rule_2d(self, box=((0.0, 1.0), (0.0, 1.0))):
        (ua, ub), (va, vb) = box
        u, wu = self.rule(ua, ub)
        v, wv = self.rule(va, vb)
        U, V = np.meshgrid(u, v, indexing="ij")
        return U.ravel(), V.ravel(), np.outer(wu, wv).ravel()

    def rule_3d(self, lo, hi):
        rules = [self.rule(a, b) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*(r[0] for r in rules), indexing="ij")
        W = rules[0][1][:, None, None] * rules[1][1][None, :, None] * rules[2][1][None, None, :]
        return np.stack([m.ravel() for m in mesh], axis=1), W.ravel()


LOOP_DEFAULT = QuadratureSpec(64, 8)
PATCH_DEFAULT = QuadratureSpec(16, 8)
VOLUME_DEFAULT = QuadratureSpec(8, 8)


def fsum_columns(values) -> np.ndarray:
    """Compensated column sums of a 2-D array (order-independent to rounding)."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.array(math.fsum(values))
    return np.array([math.fsum(col) for col in values.reshape(values.shape[0], -1).T]).reshape(values.shape[1:])
