"""Goodness of fit for histogram regressions: Omega, Pseudo-R2, RMSE_W and the SSY decomposition."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .errors import KindMismatch
from .histcore import PiecewiseLinear, combine, constant, qf_center
from .models import ModelFit, ModelKind, SymbolicTable, irpino_verde_systems, predicted_functions
from .wmetric import barycenter, covariance

OMEGA_REFERENCES = ("mean", "barycenter")


@dataclass(frozen=True)
class GofReport:
    """Fit indices. ``ssy = sse + ssr + bias`` holds up to round-off."""

    sse: float
    ssr: float
    ssy: float
    bias: float
    omega: float
    pseudo_r2: float
    rmse_w: float
    n: int
    omega_reference: str = "mean"
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> GofReport:
        return cls(**d)


@dataclass(frozen=True)
class SsyDecomposition:
    ssy: float
    sse: float
    ssr: float
    bias: float
    dispersion_term: float
    gradient_term: float


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def _sum_rowwise(fs, gs, mode):
    return float(np.sum(kernels.rowwise_packed(kernels.pack(fs), kernels.pack(gs), mode)))


def goodness(
    tbl: SymbolicTable,
    fit: ModelFit,
    *,
    predictions: list[PiecewiseLinear] | None = None,
    omega_reference: str = "mean",
) -> GofReport:
    """Score ``fit`` on ``tbl``.

    SSE, SSY and SSR are sums of squared Wasserstein distances to the response
    barycenter ``ybar(t)``; ``bias`` is the remaining cross term, integrated
    directly. Omega compares distances to the grand mean ``ybar`` by default,
    or to ``ybar(t)`` with ``omega_reference="barycenter"``. BD fits are scored
    on Monte Carlo predicted histograms unless ``predictions`` are given.
    """
    if omega_reference not in OMEGA_REFERENCES:
        raise ValueError(f"omega_reference must be one of {OMEGA_REFERENCES}")
    ys = [h.quantile_function for h in tbl.response]
    if predictions is None:
        predictions = predicted_functions(tbl, fit)
    n = len(ys)
    ybar_t = barycenter(ys)
    ybar = ybar_t.mean
    ref = [ybar_t] * n
    sse = _sum_rowwise(ys, predictions, kernels.SQDIFF)
    ssy = _sum_rowwise(ys, ref, kernels.SQDIFF)
    ssr = _sum_rowwise(predictions, ref, kernels.SQDIFF)
    gaps = [combine([ybar_t, q], [1.0, -1.0]) for q in predictions]
    errs = [combine([y, q], [1.0, -1.0]) for y, q in zip(ys, predictions)]
    bias = -2.0 * _sum_rowwise(gaps, errs, kernels.PRODUCT)

    if omega_reference == "mean":
        flat = [constant(ybar)] * n
        num = _sum_rowwise(predictions, flat, kernels.SQDIFF)
        den = _sum_rowwise(ys, flat, kernels.SQDIFF)
    else:
        num, den = ssr, ssy

    # squared distances below this are round-off for data of this magnitude
    floor = n * (1e-12 * (1.0 + max(float(np.abs(y.knots_x).max()) for y in ys))) ** 2
    degenerate = ssy <= floor or den <= floor
    if degenerate:
        omega = pseudo_r2 = 1.0 if sse <= floor else 0.0
    else:
        omega = _clamp01(num / den)
        pseudo_r2 = _clamp01(1.0 - sse / ssy)
    return GofReport(sse, ssr, ssy, bias, omega, pseudo_r2, math.sqrt(sse / n), n, omega_reference, degenerate)


def ssy_decompose(tbl: SymbolicTable, fit: ModelFit) -> SsyDecomposition:
    """Closed-form bias of an Irpino-Verde fit.

    ``bias = -2 [n (var(ybar(t)) - sum_j gamma_j cov(ybar(t), xbar_j(t))) + Gamma . grad]``
    with ``grad = G Gamma - c`` from the centered Gram system (zero wherever
    ``gamma_j > 0``, so the term vanishes at an exact NNLS solution).
    """
    if fit.kind is not ModelKind.IRPINO_VERDE:
        raise KindMismatch("the SSY decomposition is defined for Irpino-Verde fits")
    n = tbl.n
    ys = [h.quantile_function for h in tbl.response]
    preds = predicted_functions(tbl, fit)
    ybar_t = barycenter(ys)
    ref = [ybar_t] * n
    sse = _sum_rowwise(ys, preds, kernels.SQDIFF)
    ssr = _sum_rowwise(preds, ref, kernels.SQDIFF)
    ssy = _sum_rowwise(ys, ref, kernels.SQDIFF)

    gamma = fit.dispersion_coeffs
    yb_c = qf_center(ybar_t)
    disp = yb_c.variance
    for g, col in zip(gamma, tbl.predictors.values()):
        if g != 0.0:
            disp -= g * covariance(ybar_t, barycenter([h.quantile_function for h in col]))
    disp *= n
    _, (g_c, c_c) = irpino_verde_systems(tbl)
    grad_term = float(gamma @ (g_c @ gamma - c_c))
    bias = -2.0 * (disp + grad_term)
    return SsyDecomposition(ssy, sse, ssr, float(bias), float(disp), grad_term)
