"""The l2 Wasserstein metric between quantile functions and the summary statistics built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateDispersion, DimensionMismatch, EmptyColumn
from .histcore import Histogram, PiecewiseLinear, QuantileFunction, combine

BD = "BD"
VI = "VI"


@dataclass(frozen=True)
class WassersteinDecomposition:
    location: float
    size: float
    shape: float
    total: float


@dataclass(frozen=True)
class VariableSummary:
    mean: float
    std_bd: float
    std_vi: float
    barycenter: QuantileFunction
    barycenter_std: float


def inner_product(f: PiecewiseLinear, g: PiecewiseLinear) -> float:
    """``∫_0^1 f(t) g(t) dt``, exact on the merged breakpoint grid."""
    return kernels.merge_integral(f.t, f.start, f.end, g.t, g.start, g.end, kernels.PRODUCT)


def wasserstein2(f: PiecewiseLinear, g: PiecewiseLinear) -> float:
    """Squared l2 Wasserstein distance, integrated directly (no cancellation through inner products)."""
    return kernels.merge_integral(f.t, f.start, f.end, g.t, g.start, g.end, kernels.SQDIFF)


def wasserstein(f: PiecewiseLinear, g: PiecewiseLinear) -> float:
    return math.sqrt(wasserstein2(f, g))


def covariance(f: PiecewiseLinear, g: PiecewiseLinear) -> float:
    """``<f, g> - mean_f mean_g``, computed on centered pieces to limit cancellation."""
    fc = PiecewiseLinear(f.t, f.start - f.mean, f.end - f.mean)
    gc = PiecewiseLinear(g.t, g.start - g.mean, g.end - g.mean)
    return inner_product(fc, gc)


def rho(f: PiecewiseLinear, g: PiecewiseLinear) -> float:
    """Correlation between two quantile functions; in (0, 1] for non-degenerate ones."""
    sf, sg = f.std, g.std
    if sf == 0.0 or sg == 0.0:
        raise DegenerateDispersion("rho is undefined when a standard deviation is zero")
    return covariance(f, g) / (sf * sg)


def wasserstein_decompose(f: PiecewiseLinear, g: PiecewiseLinear) -> WassersteinDecomposition:
    """Split ``d_W^2`` into location, size and shape parts.

    The shape part ``2 s_f s_g (1 - rho)`` is taken as ``d_W^2`` of the centered
    functions minus the size part. That needs no special case for a zero standard
    deviation and is exactly zero for identical shapes.
    """
    sf, sg = f.std, g.std
    location = (f.mean - g.mean) ** 2
    size = (sf - sg) ** 2
    if sf > 0.0 and sg > 0.0:
        fc = PiecewiseLinear(f.t, f.start - f.mean, f.end - f.mean)
        gc = PiecewiseLinear(g.t, g.start - g.mean, g.end - g.mean)
        shape = max(wasserstein2(fc, gc) - size, 0.0)
    else:
        shape = 0.0
    return WassersteinDecomposition(location, size, shape, location + size + shape)


def barycenter(qs: Sequence[PiecewiseLinear]) -> PiecewiseLinear:
    """Pointwise average of quantile functions (the Wasserstein barycenter)."""
    if len(qs) == 0:
        raise EmptyColumn("barycenter of an empty list")
    n = len(qs)
    out = combine(qs, [1.0 / n] * n)
    if all(isinstance(q, QuantileFunction) for q in qs):
        return out.to_quantile()
    return out


def _qfs(col):
    return [h.quantile_function if isinstance(h, Histogram) else h for h in col]


def column_ssy(qs: Sequence[PiecewiseLinear], center: PiecewiseLinear | None = None) -> float:
    """``sum_i d_W^2(q_i, center)``; the barycenter is used when no center is given."""
    if center is None:
        center = barycenter(qs)
    pa = kernels.pack(qs)
    pb = kernels.pack([center] * len(qs))
    return float(np.sum(kernels.rowwise_packed(pa, pb, kernels.SQDIFF)))


def variable_summary(col: Sequence[Histogram]) -> VariableSummary:
    """Billard-Diday and Verde-Irpino summaries of one histogram variable."""
    if len(col) == 0:
        raise EmptyColumn("variable_summary of an empty column")
    n = len(col)
    qs = _qfs(col)
    mean = sum(h.mean for h in col) / n
    centered = [float(np.sum(h.weight * h.centered_second_moments(mean))) for h in col]
    std_bd = math.sqrt(max(sum(centered) / n, 0.0))
    bary = barycenter(qs)
    std_vi = math.sqrt(column_ssy(qs, bary) / n)
    return VariableSummary(mean, std_bd, std_vi, bary, bary.std)


def bd_covariance(col_x: Sequence[Histogram], col_y: Sequence[Histogram], form: str = "billard") -> float:
    """Covariance between two histogram variables in the Billard-Diday framework.

    ``form="billard"`` is the histogram covariance of Billard and Diday: each unit
    contributes ``G_x G_y (sum_k p_k sqrt(Q_k^x)) (sum_l q_l sqrt(Q_l^y))`` where
    ``Q`` is a bin's second moment about the grand mean and ``G`` is -1 when the
    unit mean does not exceed the grand mean, else +1. ``form="mean_product"``
    is ``(1/n) sum_i xbar_i ybar_i - xbar ybar`` (independent joint density).
    """
    if len(col_x) != len(col_y):
        raise DimensionMismatch("columns differ in length")
    if len(col_x) == 0:
        raise EmptyColumn("covariance of empty columns")
    n = len(col_x)
    mx = sum(h.mean for h in col_x) / n
    my = sum(h.mean for h in col_y) / n
    if form == "mean_product":
        return sum((hx.mean - mx) * (hy.mean - my) for hx, hy in zip(col_x, col_y)) / n
    if form != "billard":
        raise ValueError(f"unknown covariance form {form!r}")
    acc = 0.0
    for hx, hy in zip(col_x, col_y):
        gx = -1.0 if hx.mean <= mx else 1.0
        gy = -1.0 if hy.mean <= my else 1.0
        rx = float(np.sum(hx.weight * np.sqrt(hx.centered_second_moments(mx))))
        ry = float(np.sum(hy.weight * np.sqrt(hy.centered_second_moments(my))))
        acc += gx * gy * rx * ry
    return acc / n


def vi_covariance(col_x: Sequence[Histogram], col_y: Sequence[Histogram]) -> float:
    """``(1/n) sum_i ∫ (x_i(t) - xbar(t)) (y_i(t) - ybar(t)) dt``."""
    if len(col_x) != len(col_y):
        raise DimensionMismatch("columns differ in length")
    qx, qy = _qfs(col_x), _qfs(col_y)
    n = len(qx)
    bx, by = barycenter(qx), barycenter(qy)
    dx = [combine([q, bx], [1.0, -1.0]) for q in qx]
    dy = [combine([q, by], [1.0, -1.0]) for q in qy]
    return float(np.sum(kernels.rowwise_packed(kernels.pack(dx), kernels.pack(dy), kernels.PRODUCT))) / n


def correlation(col_x: Sequence[Histogram], col_y: Sequence[Histogram], method: str = VI, bd_form: str = "billard") -> float:
    """Correlation between two histogram variables, ``method`` in ``{"BD", "VI"}``."""
    method = method.upper()
    sx, sy = variable_summary(col_x), variable_summary(col_y)
    if method == BD:
        den = sx.std_bd * sy.std_bd
        num = bd_covariance(col_x, col_y, bd_form)
    elif method == VI:
        den = sx.std_vi * sy.std_vi
        num = vi_covariance(col_x, col_y)
    else:
        raise ValueError(f"unknown correlation method {method!r}")
    if den == 0.0:
        raise DegenerateDispersion("correlation undefined for a column with zero dispersion")
    return num / den
