"""Nonparametric bootstrap of fit coefficients and fit indices with percentile intervals."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AllResamplesFailed, HistRegError
from .gof import goodness
from .models import ModelKind, SymbolicTable, fit_model

GOF_INDICES = ("omega", "pseudo_r2", "rmse_w")
PERCENTILES = (2.5, 97.5)


@dataclass(frozen=True)
class ParamStats:
    observed: float
    mean: float
    bias: float
    se: float
    p2_5: float
    p97_5: float


@dataclass(frozen=True)
class GofStats:
    observed: float
    mean: float
    p2_5: float
    p97_5: float


@dataclass
class BootstrapSummary:
    """Bootstrap distribution summaries; the point estimate of each quantity is its mean."""

    kind: ModelKind
    params: dict[str, ParamStats]
    gof: dict[str, GofStats]
    n_resamples: int
    seed: int
    n_failed: int
    draws: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def n_succeeded(self) -> int:
        return self.n_resamples - self.n_failed

    def to_dict(self, include_draws: bool = False) -> dict:
        out = {
            "model": self.kind.value,
            "n_resamples": self.n_resamples,
            "seed": self.seed,
            "n_failed": self.n_failed,
            "params": {k: asdict(v) for k, v in self.params.items()},
            "gof": {k: asdict(v) for k, v in self.gof.items()},
        }
        if include_draws:
            out["draws"] = {k: v.tolist() for k, v in self.draws.items()}
        return out


def _generator(seed: int, b: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(b)])))


def resample_indices(n: int, seed: int, b: int) -> np.ndarray:
    """Row indices of resample ``b``: ``n`` draws with replacement from ``range(n)``."""
    return _generator(seed, b).integers(0, n, n)


def resample_mc_seed(seed: int, b: int) -> int:
    """Monte Carlo seed for BD predictions inside resample ``b``."""
    return int(np.random.SeedSequence([int(seed), int(b), 1]).generate_state(1)[0])


def worker_count(workers: int | None = None) -> int:
    cap = os.environ.get("HISTREG_THREADS")
    n = workers if workers is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(int(cap), 1))
    return max(int(n), 1)


def _one(tbl, kind, seed, b, with_gof, fit_kw):
    sub = tbl.take(resample_indices(tbl.n, seed, b))
    kw = dict(fit_kw)
    if kind is ModelKind.BILLARD_DIDAY:
        kw.setdefault("seed", resample_mc_seed(seed, b))
    try:
        fit = fit_model(sub, kind, diagnostics=False, **kw)
        params = fit.params
        if not with_gof:
            return params, None
        rep = goodness(sub, fit)
        return params, {k: getattr(rep, k) for k in GOF_INDICES}
    except (HistRegError, np.linalg.LinAlgError):
        return None


def _mean_se(x):
    # constant draws summarize exactly, without summation round-off
    if x.size == 1 or np.all(x == x[0]):
        return float(x[0]), 0.0
    return float(np.mean(x)), float(np.std(x, ddof=1))


def _percentiles(x):
    lo, hi = np.percentile(x, PERCENTILES, method="linear")
    return float(lo), float(hi)


def bootstrap(
    tbl: SymbolicTable,
    kind,
    n_resamples: int = 1000,
    seed: int = 0,
    *,
    workers: int | None = None,
    with_gof: bool = True,
    **fit_kw,
) -> BootstrapSummary:
    """Refit on ``n_resamples`` row resamples of ``tbl``.

    Resample ``b`` draws its rows from a Philox stream keyed by ``(seed, b)``
    and results are reduced in index order, so the summary does not depend on
    ``workers``. Fits that fail are counted in ``n_failed`` and left out. Fit
    indices are evaluated on the resampled table.
    """
    kind = ModelKind.parse(kind)
    if n_resamples < 2:
        raise ValueError("n_resamples must be at least 2")
    observed = fit_model(tbl, kind, **fit_kw)
    obs_params = observed.params
    obs_gof = {k: getattr(observed.diagnostics, k) for k in GOF_INDICES}

    nw = worker_count(workers)
    if nw == 1:
        results = [_one(tbl, kind, seed, b, with_gof, fit_kw) for b in range(n_resamples)]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(lambda b: _one(tbl, kind, seed, b, with_gof, fit_kw), range(n_resamples)))

    ok = [r for r in results if r is not None]
    n_failed = n_resamples - len(ok)
    if not ok:
        raise AllResamplesFailed(f"all {n_resamples} resampled fits failed")

    draws = {name: np.array([r[0][name] for r in ok]) for name in obs_params}
    params = {}
    for name, x in draws.items():
        m, se = _mean_se(x)
        params[name] = ParamStats(obs_params[name], m, m - obs_params[name], se, *_percentiles(x))
    gof = {}
    if with_gof:
        for name in GOF_INDICES:
            x = np.array([r[1][name] for r in ok])
            draws[name] = x
            gof[name] = GofStats(obs_gof[name], _mean_se(x)[0], *_percentiles(x))
    return BootstrapSummary(kind, params, gof, n_resamples, int(seed), n_failed, draws)
