"""Polynomials in Newton form with divided-difference fitting.

Evaluation and derivatives use nested (Horner-style) recurrences on the
Newton basis directly; the divided differences are never converted to
monomial coefficients, so truncating ``dd`` to its first k+1 entries
yields exactly the interpolant through the first k+1 nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


class DuplicateNodeError(ValueError):
    """Interpolation abscissae must be pairwise distinct."""


@dataclass(frozen=True, eq=False)
class NewtonPoly:
    nodes: np.ndarray
    dd: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        dd = np.ascontiguousarray(self.dd, dtype=float)
        if nodes.ndim != 1 or nodes.shape != dd.shape or nodes.size == 0:
            raise ValueError("nodes and dd must be equal-length 1-D arrays")
        if np.unique(nodes).size != nodes.size:
            raise DuplicateNodeError("interpolation nodes must be distinct")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "dd", dd)

    @property
    def degree(self) -> int:
        return self.nodes.size - 1

    def __call__(self, x):
        """Evaluate at a scalar or array ``x`` (nested form)."""
        x = np.asarray(x, dtype=float)
        p = np.full(x.shape, self.dd[-1])
        for j in range(self.nodes.size - 2, -1, -1):
            p = self.dd[j] + (x - self.nodes[j]) * p
        return p if p.shape else float(p)

    def eval_with_derivs(self, x: float):
        """(p, p', p'') at scalar ``x``, all exact for the stored series."""
        return _kernels.newton012(self.nodes, self.dd, float(x))

    def derivative(self, x):
        """First derivative at scalar or array ``x``."""
        x = np.asarray(x, dtype=float)
        p = np.full(x.shape, self.dd[-1])
        p1 = np.zeros(x.shape)
        for j in range(self.nodes.size - 2, -1, -1):
            d = x - self.nodes[j]
            p1 = p1 * d + p
            p = self.dd[j] + d * p
        return p1 if p1.shape else float(p1)

    def truncated(self, degree: int) -> "NewtonPoly":
        """Interpolant through the first ``degree + 1`` nodes."""
        if degree < 0 or degree > self.degree:
            raise ValueError(f"degree must be in [0, {self.degree}]")
        k = degree + 1
        return NewtonPoly(self.nodes[:k].copy(), self.dd[:k].copy())


def divided_differences(nodes, values) -> np.ndarray:
    """Top row of the divided-difference table for (nodes, values)."""
    x = np.asarray(nodes, dtype=float)
    col = np.asarray(values, dtype=float).copy()
    if x.ndim != 1 or x.shape != col.shape or x.size == 0:
        raise ValueError("nodes and values must be equal-length 1-D arrays")
    if np.unique(x).size != x.size:
        raise DuplicateNodeError("interpolation nodes must be distinct")
    n = x.size
    out = np.empty(n)
    out[0] = col[0]
    for j in range(1, n):
        col = (col[1:] - col[:-1]) / (x[j:] - x[:-j])
        out[j] = col[0]
    return out


def newton_interpolate(nodes, values) -> NewtonPoly:
    """Interpolating polynomial through all (node, value) pairs."""
    x = np.asarray(nodes, dtype=float)
    return NewtonPoly(x, divided_differences(x, values))
