"""Dense least squares over matrices of quantile functions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionMismatch, MaxIterations, SingularDesign
from .histcore import PiecewiseLinear, constant

RCOND_MIN = 1e-12


class QfMatrix:
    """Rectangular ``n x m`` grid of piecewise-linear functions (constants as flat functions)."""

    def __init__(self, rows: Sequence[Sequence[PiecewiseLinear]]):
        rows = [list(r) for r in rows]
        if not rows:
            raise DimensionMismatch("QfMatrix needs at least one row")
        m = len(rows[0])
        if any(len(r) != m for r in rows):
            raise DimensionMismatch("QfMatrix rows differ in length")
        self.rows = rows
        self.shape = (len(rows), m)
        self._packed = None

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence[PiecewiseLinear]]) -> QfMatrix:
        return cls([list(r) for r in zip(*cols)])

    @classmethod
    def from_scalars(cls, a) -> QfMatrix:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls([[constant(v) for v in row] for row in a])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def column(self, j):
        return [r[j] for r in self.rows]

    @property
    def packed(self):
        if self._packed is None:
            self._packed = kernels.pack(q for r in self.rows for q in r)
        return self._packed


@dataclass(frozen=True)
class NnlsResult:
    coefficients: np.ndarray
    active_set: tuple
    gradient: np.ndarray
    iterations: int


def gram(a: QfMatrix, b: QfMatrix) -> np.ndarray:
    """``out[j, k] = sum_i <A[i, j], B[i, k]>``; summation over ``i`` runs in row order."""
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    n, m = a.shape
    k = b.shape[1]
    return kernels.gram_packed(a.packed, b.packed, n, m, k)


def rcond(g: np.ndarray) -> float:
    """Reciprocal 2-norm condition number of a symmetric matrix."""
    if g.size == 0:
        return 1.0
    ev = np.abs(np.linalg.eigvalsh(g))
    top = ev.max()
    return float(ev.min() / top) if top > 0 else 0.0


def ols(g, c) -> np.ndarray:
    """Solve the normal equations ``G b = c``."""
    g = np.asarray(g, dtype=float)
    c = np.asarray(c, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] != c.size:
        raise DimensionMismatch(f"incompatible shapes {g.shape} and {c.shape}")
    rc = rcond(g)
    if rc < RCOND_MIN:
        raise SingularDesign(f"design is singular (reciprocal condition {rc:.3g})")
    try:
        l = np.linalg.cholesky(g)
        return np.linalg.solve(l.T, np.linalg.solve(l, c))
    except np.linalg.LinAlgError:
        return np.linalg.solve(g, c)


def nnls(g, c, tol: float | None = None) -> NnlsResult:
    """Minimize ``b' G b - 2 c' b`` subject to ``b >= 0`` (Lawson-Hanson, normal-equations form).

    The entering variable is the one with the most negative gradient, lowest index
    on ties. ``tol`` defaults to ``1e-10 * trace(G)``.
    """
    g = np.asarray(g, dtype=float)
    c = np.asarray(c, dtype=float)
    m = c.size
    if g.shape != (m, m):
        raise DimensionMismatch(f"incompatible shapes {g.shape} and {c.shape}")
    if tol is None:
        tol = 1e-10 * max(float(np.trace(g)), np.finfo(float).tiny)
    x = np.zeros(m)
    passive = np.zeros(m, dtype=bool)
    max_iter = 3 * max(m, 1)
    it = 0

    w = c - g @ x
    while True:
        cand = np.where(~passive, w, -np.inf)
        j = int(np.argmax(cand)) if m else 0
        if m == 0 or cand[j] <= tol:
            break
        if it >= max_iter:
            raise MaxIterations(f"NNLS did not converge in {max_iter} iterations")
        it += 1
        passive[j] = True
        while True:
            idx = np.flatnonzero(passive)
            z = np.zeros(m)
            z[idx] = _solve_sub(g, c, idx)
            if np.all(z[idx] > 0):
                x = z
                break
            if it >= max_iter:
                raise MaxIterations(f"NNLS did not converge in {max_iter} iterations")
            it += 1
            neg = idx[z[idx] <= 0]
            denom = x[neg] - z[neg]
            ratios = np.where(denom > 0, x[neg] / np.where(denom > 0, denom, 1.0), 0.0)
            block = int(np.argmin(ratios))
            x = x + ratios[block] * (z - x)
            # the blocking index leaves even if round-off kept it positive
            drop = passive & (x <= 0.0)
            drop[neg[block]] = True
            x[drop] = 0.0
            passive &= ~drop
        w = c - g @ x

    x[~passive] = 0.0
    grad = g @ x - c
    return NnlsResult(x, tuple(int(i) for i in np.flatnonzero(~passive)), grad, it)


def _solve_sub(g, c, idx):
    sub = g[np.ix_(idx, idx)]
    try:
        return np.linalg.solve(sub, c[idx])
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(sub, c[idx], rcond=None)[0]
