"""Linear regression estimators for histogram-valued data.

Three estimators share one :class:`ModelFit` record:

* ``bd`` (Billard-Diday): classical normal equations on a covariance matrix of
  histogram variables; predicts scalars, so predicted distributions come from
  Monte Carlo.
* ``db`` (Dias-Brito): quantile functions plus those of the reflected
  distributions, with non-negative slopes.
* ``iv`` (Irpino-Verde): means and centered quantile functions regressed
  separately, the latter under non-negativity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import kernels, solver, wmetric
from .errors import DimensionMismatch, KindMismatch, SingularDesign
from .histcore import Histogram, PiecewiseLinear, QuantileFunction, combine, constant, qf_center, qf_symmetric

MC_SAMPLES = 10_000
MC_BINS = 20
MC_SEED = 0


class ModelKind(str, enum.Enum):
    BILLARD_DIDAY = "bd"
    DIAS_BRITO = "db"
    IRPINO_VERDE = "iv"

    @classmethod
    def parse(cls, value) -> ModelKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown model kind {value!r}; expected one of bd, db, iv") from None


@dataclass(frozen=True, eq=False)
class SymbolicTable:
    """``n`` units described by one response and ``p`` predictor histogram variables."""

    unit_ids: tuple
    response_name: str
    response: tuple
    predictors: Mapping[str, tuple]

    def __post_init__(self):
        object.__setattr__(self, "unit_ids", tuple(self.unit_ids))
        object.__setattr__(self, "response", tuple(self.response))
        object.__setattr__(self, "predictors", {k: tuple(v) for k, v in self.predictors.items()})
        n = len(self.response)
        if len(self.unit_ids) != n or any(len(c) != n for c in self.predictors.values()):
            raise DimensionMismatch("all columns must have one entry per unit")
        for col in (self.response, *self.predictors.values()):
            for h in col:
                if not isinstance(h, Histogram):
                    raise TypeError(f"table cells must be Histogram, got {type(h).__name__}")

    @property
    def n(self) -> int:
        return len(self.response)

    @property
    def p(self) -> int:
        return len(self.predictors)

    @property
    def predictor_names(self) -> list[str]:
        return list(self.predictors)

    @property
    def variables(self) -> dict[str, tuple]:
        return {self.response_name: self.response, **self.predictors}

    def row(self, i: int) -> list[Histogram]:
        return [col[i] for col in self.predictors.values()]

    def take(self, indices) -> SymbolicTable:
        """Rows ``indices`` (repeats allowed), e.g. a bootstrap resample."""
        idx = [int(i) for i in indices]
        return SymbolicTable(
            tuple(self.unit_ids[i] for i in idx),
            self.response_name,
            tuple(self.response[i] for i in idx),
            {k: tuple(c[i] for i in idx) for k, c in self.predictors.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, SymbolicTable):
            return NotImplemented
        return (
            self.unit_ids == other.unit_ids
            and self.response_name == other.response_name
            and self.response == other.response
            and self.predictors == other.predictors
            and list(self.predictors) == list(other.predictors)
        )


@dataclass(eq=False)
class ModelFit:
    kind: ModelKind
    intercept: float
    level_coeffs: np.ndarray
    dispersion_coeffs: np.ndarray
    predictor_names: list[str]
    diagnostics: Any = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = ModelKind.parse(self.kind)
        self.level_coeffs = np.asarray(self.level_coeffs, dtype=float)
        self.dispersion_coeffs = np.asarray(self.dispersion_coeffs, dtype=float)
        p = len(self.predictor_names)
        if self.level_coeffs.size != p:
            raise DimensionMismatch("one level coefficient per predictor expected")
        expected = 0 if self.kind is ModelKind.BILLARD_DIDAY else p
        if self.dispersion_coeffs.size != expected:
            raise DimensionMismatch(f"{self.kind.value} fit needs {expected} dispersion coefficients")

    @property
    def dispersion_label(self) -> str:
        return "gamma" if self.kind is ModelKind.IRPINO_VERDE else "beta_tilde"

    @property
    def params(self) -> dict[str, float]:
        """Coefficients by name: ``beta0``, ``beta[X]``, then ``gamma[X]`` or ``beta_tilde[X]``."""
        out = {"beta0": float(self.intercept)}
        for name, b in zip(self.predictor_names, self.level_coeffs):
            out[f"beta[{name}]"] = float(b)
        for name, g in zip(self.predictor_names, self.dispersion_coeffs):
            out[f"{self.dispersion_label}[{name}]"] = float(g)
        return out

    @classmethod
    def from_params(cls, kind, params: Mapping[str, float], predictor_names: Sequence[str], **kw) -> ModelFit:
        kind = ModelKind.parse(kind)
        label = "gamma" if kind is ModelKind.IRPINO_VERDE else "beta_tilde"
        level = [params[f"beta[{n}]"] for n in predictor_names]
        disp = [] if kind is ModelKind.BILLARD_DIDAY else [params[f"{label}[{n}]"] for n in predictor_names]
        return cls(kind, params["beta0"], level, disp, list(predictor_names), **kw)


def _check_table(tbl: SymbolicTable):
    if tbl.p == 0:
        raise DimensionMismatch("at least one predictor is required")
    if tbl.n < tbl.p + 2:
        raise DimensionMismatch(f"need at least p + 2 = {tbl.p + 2} units, got {tbl.n}")


def _with_diagnostics(tbl, fit, diagnostics):
    if diagnostics:
        from .gof import goodness

        fit.diagnostics = goodness(tbl, fit)
    return fit


def irpino_verde_systems(tbl: SymbolicTable):
    """Means design ``(G, c)`` and centered-function Gram system ``(G, c)``."""
    xbar = np.array([[h.mean for h in col] for col in tbl.predictors.values()]).T
    ybar = np.array([h.mean for h in tbl.response])
    design = np.column_stack([np.ones(tbl.n), xbar])
    xc = solver.QfMatrix.from_columns(
        [[qf_center(h.quantile_function) for h in col] for col in tbl.predictors.values()]
    )
    yc = solver.QfMatrix.from_columns([[qf_center(h.quantile_function) for h in tbl.response]])
    g_c = solver.gram(xc, xc)
    c_c = solver.gram(xc, yc)[:, 0]
    return (design.T @ design, design.T @ ybar), (g_c, c_c)


def fit_irpino_verde(tbl: SymbolicTable, *, tol: float | None = None, diagnostics: bool = True) -> ModelFit:
    """Means by OLS, centered quantile functions by NNLS; the two parts of the SSE are independent."""
    _check_table(tbl)
    (g_m, c_m), (g_c, c_c) = irpino_verde_systems(tbl)
    b = solver.ols(g_m, c_m)
    meta = {"rcond_means": solver.rcond(g_m), "warnings": []}
    if not np.any(np.diag(g_c) > 0):
        gamma = np.zeros(tbl.p)
        res = solver.NnlsResult(gamma, tuple(range(tbl.p)), -c_c, 0)
        if any(h.quantile_function.std > 0 for h in tbl.response):
            meta["warnings"].append("degenerate_dispersion: every centered predictor is identically zero")
    else:
        res = solver.nnls(g_c, c_c, tol)
        gamma = res.coefficients
    meta["nnls_active_set"] = list(res.active_set)
    meta["nnls_gradient"] = res.gradient.tolist()
    meta["nnls_iterations"] = res.iterations
    fit = ModelFit(ModelKind.IRPINO_VERDE, float(b[0]), b[1:], gamma, tbl.predictor_names, metadata=meta)
    return _with_diagnostics(tbl, fit, diagnostics)


def fit_dias_brito(tbl: SymbolicTable, *, tol: float | None = None, diagnostics: bool = True) -> ModelFit:
    """Non-negative slopes on ``x_j(t)`` and ``-x_j(1 - t)``; the intercept is free.

    The intercept is profiled out exactly: with ``G00 = n`` the Schur complement
    of the constant column gives the system for the 2p non-negative slopes.
    """
    _check_table(tbl)
    p = tbl.p
    cols = [[constant(1.0)] * tbl.n]
    cols += [[h.quantile_function for h in col] for col in tbl.predictors.values()]
    cols += [[qf_symmetric(h.quantile_function) for h in col] for col in tbl.predictors.values()]
    design = solver.QfMatrix.from_columns(cols)
    resp = solver.QfMatrix.from_columns([[h.quantile_function for h in tbl.response]])
    g = solver.gram(design, design)
    c = solver.gram(design, resp)[:, 0]
    g00 = g[0, 0]
    g_s = g[1:, 1:] - np.outer(g[1:, 0], g[0, 1:]) / g00
    c_s = c[1:] - g[1:, 0] * c[0] / g00
    res = solver.nnls(g_s, c_s, tol)
    coef = res.coefficients
    passive = [i for i in range(2 * p) if i not in res.active_set]
    if passive and solver.rcond(g_s[np.ix_(passive, passive)]) < solver.RCOND_MIN:
        raise SingularDesign("Dias-Brito design is singular on the selected columns")
    beta0 = (c[0] - g[0, 1:] @ coef) / g00
    meta = {
        "rcond_design": solver.rcond(g_s),
        "nnls_active_set": list(res.active_set),
        "nnls_iterations": res.iterations,
        "warnings": [],
    }
    fit = ModelFit(ModelKind.DIAS_BRITO, float(beta0), coef[:p], coef[p:], tbl.predictor_names, metadata=meta)
    return _with_diagnostics(tbl, fit, diagnostics)


def fit_billard_diday(
    tbl: SymbolicTable,
    *,
    covariance: str = "billard",
    n_samples: int = MC_SAMPLES,
    n_bins: int = MC_BINS,
    seed: int = MC_SEED,
    diagnostics: bool = True,
) -> ModelFit:
    """Classical normal equations on Billard-Diday covariances.

    The diagonal holds the full (between plus within) variances. Off-diagonal and
    response covariances use :func:`histreg.wmetric.bd_covariance` with ``covariance``
    as its form.
    """
    _check_table(tbl)
    cols = list(tbl.predictors.values())
    p = len(cols)
    s = np.empty((p, p))
    for j in range(p):
        s[j, j] = wmetric.variable_summary(cols[j]).std_bd ** 2
        for k in range(j + 1, p):
            s[j, k] = s[k, j] = wmetric.bd_covariance(cols[j], cols[k], covariance)
    s_xy = np.array([wmetric.bd_covariance(col, tbl.response, covariance) for col in cols])
    beta = solver.ols(s, s_xy)
    xbar = np.array([np.mean([h.mean for h in col]) for col in cols])
    ybar = float(np.mean([h.mean for h in tbl.response]))
    meta = {
        "covariance": covariance,
        "note": "cross-covariances use the same form as predictor-response covariances; diagonal is the full variance",
        "mc": {"n_samples": n_samples, "n_bins": n_bins, "seed": seed},
        "warnings": [],
    }
    fit = ModelFit(ModelKind.BILLARD_DIDAY, ybar - float(beta @ xbar), beta, [], tbl.predictor_names, metadata=meta)
    return _with_diagnostics(tbl, fit, diagnostics)


FITTERS = {
    ModelKind.BILLARD_DIDAY: fit_billard_diday,
    ModelKind.DIAS_BRITO: fit_dias_brito,
    ModelKind.IRPINO_VERDE: fit_irpino_verde,
}


def fit_model(tbl: SymbolicTable, kind, **kw) -> ModelFit:
    return FITTERS[ModelKind.parse(kind)](tbl, **kw)


def _as_qf(x):
    return x.quantile_function if isinstance(x, Histogram) else x


def predict(fit: ModelFit, predictors: Sequence) -> QuantileFunction:
    """Predicted response quantile function for one unit (IV and DB fits)."""
    if len(predictors) != len(fit.predictor_names):
        raise DimensionMismatch(f"expected {len(fit.predictor_names)} predictors, got {len(predictors)}")
    qs = [_as_qf(x) for x in predictors]
    if fit.kind is ModelKind.IRPINO_VERDE:
        const = fit.intercept + float(sum(b * q.mean for b, q in zip(fit.level_coeffs, qs)))
        out = combine([qf_center(q) for q in qs], fit.dispersion_coeffs, const)
    elif fit.kind is ModelKind.DIAS_BRITO:
        out = combine(qs + [qf_symmetric(q) for q in qs], np.r_[fit.level_coeffs, fit.dispersion_coeffs], fit.intercept)
    else:
        raise KindMismatch("Billard-Diday fits predict distributions through monte_carlo_distribution")
    return out.to_quantile()


def _mc_generator(seed: int, stream: int, j: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream), int(j)])))


def equal_frequency_histogram(samples, n_bins: int) -> Histogram:
    """Histogram with ``n_bins`` bins of equal mass 1/n_bins, edges at sample quantiles."""
    edges = np.quantile(np.asarray(samples, dtype=float), np.linspace(0.0, 1.0, n_bins + 1))
    edges = np.maximum.accumulate(edges)
    lo, hi = edges[:-1], edges[1:]
    w = np.full(n_bins, 1.0 / n_bins)
    # consecutive point masses at the same location are one bin
    keep = np.ones(n_bins, dtype=bool)
    for k in range(1, n_bins):
        if lo[k] == hi[k] and lo[k - 1] == hi[k - 1] == lo[k]:
            keep[k] = False
    if not keep.all():
        groups = np.cumsum(keep) - 1
        w = np.bincount(groups, weights=w)
        lo, hi = lo[keep], hi[keep]
    return Histogram(lo, hi, w)


def monte_carlo_samples(fit: ModelFit, predictors: Sequence, n_samples: int = MC_SAMPLES, seed: int = MC_SEED, stream: int = 0) -> np.ndarray:
    """Draws of ``beta0 + sum_j beta_j X_j`` with independent ``X_j`` from each predictor distribution."""
    if fit.kind is not ModelKind.BILLARD_DIDAY:
        raise KindMismatch("Monte Carlo prediction applies to Billard-Diday fits only")
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if len(predictors) != len(fit.predictor_names):
        raise DimensionMismatch(f"expected {len(fit.predictor_names)} predictors, got {len(predictors)}")
    y = np.full(n_samples, float(fit.intercept))
    for j, (x, b) in enumerate(zip(predictors, fit.level_coeffs)):
        q = _as_qf(x)
        u = _mc_generator(seed, stream, j).random(n_samples)
        y += b * kernels.sample_inverse_cdf(q.t, q.start, q.end, u)
    return y


def monte_carlo_distribution(
    fit: ModelFit,
    predictors: Sequence,
    n_samples: int = MC_SAMPLES,
    seed: int = MC_SEED,
    n_bins: int = MC_BINS,
    stream: int = 0,
) -> Histogram:
    """Equal-frequency histogram of Monte Carlo draws of the BD prediction.

    Predictor ``j`` of unit ``stream`` draws from a Philox stream keyed by
    ``(seed, stream, j)``, so results are reproducible and independent of the
    order units are processed in.
    """
    return equal_frequency_histogram(monte_carlo_samples(fit, predictors, n_samples, seed, stream), n_bins)


def predicted_functions(tbl: SymbolicTable, fit: ModelFit, **mc) -> list[QuantileFunction]:
    """Predicted response quantile function for every unit of ``tbl``."""
    if fit.kind is ModelKind.BILLARD_DIDAY:
        opts = {**fit.metadata.get("mc", {}), **mc}
        return [
            monte_carlo_distribution(
                fit, tbl.row(i), opts.get("n_samples", MC_SAMPLES), opts.get("seed", MC_SEED),
                opts.get("n_bins", MC_BINS), stream=i,
            ).quantile_function
            for i in range(tbl.n)
        ]
    return [predict(fit, tbl.row(i)) for i in range(tbl.n)]


def residual(tbl: SymbolicTable, fit: ModelFit, i: int, prediction: PiecewiseLinear | None = None) -> PiecewiseLinear:
    """Residual function ``e_i(t) = y_i(t) - yhat_i(t)``, rebuilt from the coefficients."""
    if prediction is None:
        if fit.kind is ModelKind.BILLARD_DIDAY:
            mc = fit.metadata.get("mc", {})
            prediction = monte_carlo_distribution(
                fit, tbl.row(i), mc.get("n_samples", MC_SAMPLES), mc.get("seed", MC_SEED), mc.get("n_bins", MC_BINS), stream=i
            ).quantile_function
        else:
            prediction = predict(fit, tbl.row(i))
    return combine([tbl.response[i].quantile_function, prediction], [1.0, -1.0])
