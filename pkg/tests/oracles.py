"""Independent reference computations used only by the tests.

Nothing here goes through the package's piecewise-linear integrals: quantile
functions are evaluated straight from bin definitions and integrated by
composite trapezoid rules on dense grids.
"""
import itertools

import numpy as np

from histreg import Histogram, SymbolicTable


def qf_from_bins(lower, upper, weight, t):
    """Quantile of a mixture of uniforms at ``t``, left-continuous at bin boundaries."""
    lower, upper, weight = (np.asarray(a, float) for a in (lower, upper, weight))
    cum = np.cumsum(weight) / np.sum(weight)
    t = np.asarray(t, float)
    k = np.clip(np.searchsorted(cum, t, side="left"), 0, len(cum) - 1)
    prev = np.where(k > 0, cum[k - 1], 0.0)
    frac = np.clip((t - prev) / (cum[k] - prev), 0.0, 1.0)
    return lower[k] + frac * (upper[k] - lower[k])


def breakpoints(*hists):
    return np.concatenate([np.cumsum(h.weight) for h in hists])


def dense_grid(*hists, points=100_001):
    """Uniform grid plus each breakpoint and a point just right of it, so jumps are resolved."""
    bp = breakpoints(*hists)
    extra = np.concatenate([bp, np.minimum(bp + 1e-12, 1.0)])
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, points), extra]))


def quad(fn, *hists, points=100_001):
    t = dense_grid(*hists, points=points)
    return float(np.trapezoid(fn(t), t))


def eval_hist(h, t):
    return qf_from_bins(h.lower, h.upper, h.weight, t)


def quad_inner(f, g):
    return quad(lambda t: eval_hist(f, t) * eval_hist(g, t), f, g)


def quad_w2(f, g):
    return quad(lambda t: (eval_hist(f, t) - eval_hist(g, t)) ** 2, f, g)


def random_histogram(rng, max_bins=4, gaps=True, point_prob=0.1, scale=None):
    """Random valid histogram: sorted bins, optional gaps, occasional point-mass bins."""
    k = int(rng.integers(1, max_bins + 1))
    scale = rng.uniform(0.5, 5.0) if scale is None else scale
    loc = rng.normal(0.0, 10.0)
    lower, upper = [], []
    x = loc
    for _ in range(k):
        if gaps and rng.random() < 0.3:
            x += rng.uniform(0.0, scale)
        width = 0.0 if rng.random() < point_prob else rng.uniform(0.05, 1.0) * scale
        lower.append(x)
        upper.append(x + width)
        x += width
    w = rng.uniform(0.1, 1.0, k)
    return Histogram(np.array(lower), np.array(upper), w / w.sum())


def random_table(rng, n=None, p=None, **kw):
    n = int(rng.integers(6, 13)) if n is None else n
    p = int(rng.integers(1, 4)) if p is None else p
    return SymbolicTable(
        tuple(f"u{i}" for i in range(n)),
        "Y",
        tuple(random_histogram(rng, **kw) for _ in range(n)),
        {f"X{j}": tuple(random_histogram(rng, **kw) for _ in range(n)) for j in range(p)},
    )


def point_table(rng, n=8, p=2):
    x = rng.normal(size=(n, p)) * 3
    y = 1.5 + x @ rng.normal(size=p) + rng.normal(size=n)
    return SymbolicTable(
        tuple(range(n)),
        "Y",
        tuple(Histogram.point(v) for v in y),
        {f"X{j}": tuple(Histogram.point(v) for v in x[:, j]) for j in range(p)},
    ), x, y


def nnls_faces(g, c):
    """Minimize ``b'Gb - 2c'b`` over ``b >= 0`` by trying every support set."""
    m = c.size
    best, best_val = np.zeros(m), 0.0
    for r in range(1, m + 1):
        for support in itertools.combinations(range(m), r):
            idx = list(support)
            try:
                sol = np.linalg.solve(g[np.ix_(idx, idx)], c[idx])
            except np.linalg.LinAlgError:
                continue
            if np.any(sol < -1e-12):
                continue
            b = np.zeros(m)
            b[idx] = np.maximum(sol, 0.0)
            val = b @ g @ b - 2 * c @ b
            if val < best_val - 1e-14:
                best, best_val = b, val
    return best, best_val
