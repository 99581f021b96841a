"""Hot numeric kernels over piecewise-linear quantile functions.

A quantile function with ``K`` pieces is three arrays: breakpoints ``t`` (length
``K + 1``, from 0 to 1) and the values ``s``/``e`` taken at the start and end of
each piece (length ``K``). Pieces may be discontinuous at breakpoints.

Every kernel exists twice: a loop version compiled by numba, and a vectorized
numpy version. :func:`merge_integral`, :func:`gram_packed`, :func:`rowwise_packed`
and :func:`sample_inverse_cdf` dispatch on :data:`histreg._accel.ENABLE_NUMBA`;
the ``*_loop`` and ``*_numpy`` names stay importable for tests and benchmarks.
"""
import numpy as np

from . import _accel

GRID_TOL = 1e-12

PRODUCT = 0
SQDIFF = 1


# ---------------------------------------------------------------- loop kernels


@_accel.jit
def _merge_integral_loop(ta, sa, ea, tb, sb, eb, mode):
    na = sa.shape[0]
    nb = sb.shape[0]
    i = 0
    j = 0
    lo = 0.0
    acc = 0.0
    while i < na and j < nb:
        hi = min(ta[i + 1], tb[j + 1])
        w = hi - lo
        if w > 0.0:
            wa = ta[i + 1] - ta[i]
            wb = tb[j + 1] - tb[j]
            da = ea[i] - sa[i]
            db = eb[j] - sb[j]
            f1 = sa[i] + da * ((lo - ta[i]) / wa)
            f2 = sa[i] + da * ((hi - ta[i]) / wa)
            g1 = sb[j] + db * ((lo - tb[j]) / wb)
            g2 = sb[j] + db * ((hi - tb[j]) / wb)
            if mode == 0:
                acc += w * (2.0 * (f1 * g1 + f2 * g2) + (f1 * g2 + f2 * g1)) / 6.0
            else:
                d1 = f1 - g1
                d2 = f2 - g2
                acc += w * (d1 * d1 + d1 * d2 + d2 * d2) / 3.0
            lo = hi
        if ta[i + 1] <= hi + 1e-12:
            i += 1
        if tb[j + 1] <= hi + 1e-12:
            j += 1
    return acc


@_accel.jit
def _gram_loop(poff_a, t_a, s_a, e_a, poff_b, t_b, s_b, e_b, n, m, k, mode):
    out = np.zeros((m, k))
    for j in range(m):
        for l in range(k):
            acc = 0.0
            for i in range(n):
                ca = i * m + j
                cb = i * k + l
                a0 = poff_a[ca]
                a1 = poff_a[ca + 1]
                b0 = poff_b[cb]
                b1 = poff_b[cb + 1]
                acc += _merge_integral_loop(
                    t_a[a0 + ca:a1 + ca + 1], s_a[a0:a1], e_a[a0:a1],
                    t_b[b0 + cb:b1 + cb + 1], s_b[b0:b1], e_b[b0:b1], mode,
                )
            out[j, l] = acc
    return out


@_accel.jit
def _rowwise_loop(poff_a, t_a, s_a, e_a, poff_b, t_b, s_b, e_b, mode):
    n = poff_a.shape[0] - 1
    out = np.empty(n)
    for i in range(n):
        a0 = poff_a[i]
        a1 = poff_a[i + 1]
        b0 = poff_b[i]
        b1 = poff_b[i + 1]
        out[i] = _merge_integral_loop(
            t_a[a0 + i:a1 + i + 1], s_a[a0:a1], e_a[a0:a1],
            t_b[b0 + i:b1 + i + 1], s_b[b0:b1], e_b[b0:b1], mode,
        )
    return out


@_accel.jit
def _sample_loop(t, s, e, u):
    k = s.shape[0]
    out = np.empty(u.shape[0])
    for r in range(u.shape[0]):
        lo = 0
        hi = k - 1
        # first piece whose right breakpoint is >= u
        while lo < hi:
            mid = (lo + hi) // 2
            if t[mid + 1] < u[r]:
                lo = mid + 1
            else:
                hi = mid
        w = t[lo + 1] - t[lo]
        out[r] = s[lo] + (e[lo] - s[lo]) * ((u[r] - t[lo]) / w)
    return out


# --------------------------------------------------------------- numpy kernels


def union_grid(*breakpoints):
    """Sorted union of breakpoint arrays, merging points closer than ``GRID_TOL``."""
    g = np.unique(np.concatenate(breakpoints))
    if g.size > 1:
        keep = np.empty(g.size, dtype=bool)
        keep[0] = True
        keep[1:] = np.diff(g) > GRID_TOL
        g = g[keep]
        g[-1] = 1.0
    g[0] = 0.0
    return g


def eval_on_grid(t, s, e, grid):
    """Start/end values of one quantile function on every sub-interval of ``grid``."""
    lo, hi = grid[:-1], grid[1:]
    idx = np.searchsorted(t, 0.5 * (lo + hi), side="right") - 1
    np.clip(idx, 0, s.size - 1, out=idx)
    t0 = t[idx]
    w = t[idx + 1] - t0
    d = e[idx] - s[idx]
    return s[idx] + d * ((lo - t0) / w), s[idx] + d * ((hi - t0) / w)


def _merge_integral_numpy(ta, sa, ea, tb, sb, eb, mode):
    grid = union_grid(ta, tb)
    w = np.diff(grid)
    f1, f2 = eval_on_grid(ta, sa, ea, grid)
    g1, g2 = eval_on_grid(tb, sb, eb, grid)
    if mode == PRODUCT:
        return float(np.sum(w * (2.0 * (f1 * g1 + f2 * g2) + (f1 * g2 + f2 * g1))) / 6.0)
    d1 = f1 - g1
    d2 = f2 - g2
    return float(np.sum(w * (d1 * d1 + d1 * d2 + d2 * d2)) / 3.0)


def _cell(poff, t, s, e, c):
    a0, a1 = poff[c], poff[c + 1]
    return t[a0 + c:a1 + c + 1], s[a0:a1], e[a0:a1]


def _gram_numpy(poff_a, t_a, s_a, e_a, poff_b, t_b, s_b, e_b, n, m, k, mode):
    out = np.zeros((m, k))
    for j in range(m):
        for l in range(k):
            acc = 0.0
            for i in range(n):
                acc += _merge_integral_numpy(
                    *_cell(poff_a, t_a, s_a, e_a, i * m + j),
                    *_cell(poff_b, t_b, s_b, e_b, i * k + l),
                    mode,
                )
            out[j, l] = acc
    return out


def _rowwise_numpy(poff_a, t_a, s_a, e_a, poff_b, t_b, s_b, e_b, mode):
    n = poff_a.size - 1
    return np.array([
        _merge_integral_numpy(*_cell(poff_a, t_a, s_a, e_a, i), *_cell(poff_b, t_b, s_b, e_b, i), mode)
        for i in range(n)
    ])


def _sample_numpy(t, s, e, u):
    idx = np.searchsorted(t, u, side="left") - 1
    np.clip(idx, 0, s.size - 1, out=idx)
    t0 = t[idx]
    return s[idx] + (e[idx] - s[idx]) * ((u - t0) / (t[idx + 1] - t0))


# -------------------------------------------------------------------- dispatch

merge_integral_loop = _merge_integral_loop
merge_integral_numpy = _merge_integral_numpy
gram_loop = _gram_loop
gram_numpy = _gram_numpy
rowwise_loop = _rowwise_loop
rowwise_numpy = _rowwise_numpy
sample_loop = _sample_loop
sample_numpy = _sample_numpy


def _pick(loop, vec):
    return loop if _accel.ENABLE_NUMBA else vec


def merge_integral(ta, sa, ea, tb, sb, eb, mode=PRODUCT):
    """Exact ``∫ f g`` (``mode=PRODUCT``) or ``∫ (f - g)^2`` (``mode=SQDIFF``) over [0, 1]."""
    return float(_pick(_merge_integral_loop, _merge_integral_numpy)(ta, sa, ea, tb, sb, eb, mode))


def pack(qfs):
    """Concatenate quantile functions into ``(poff, t, s, e)`` arrays.

    Piece offsets ``poff`` have one entry per function plus one; breakpoints of
    function ``c`` live at ``t[poff[c] + c : poff[c + 1] + c + 1]``.
    """
    qfs = list(qfs)
    sizes = np.fromiter((q.start.size for q in qfs), dtype=np.int64, count=len(qfs))
    poff = np.zeros(len(qfs) + 1, dtype=np.int64)
    np.cumsum(sizes, out=poff[1:])
    if not qfs:
        empty = np.empty(0)
        return poff, empty, empty, empty
    t = np.concatenate([q.t for q in qfs])
    s = np.concatenate([q.start for q in qfs])
    e = np.concatenate([q.end for q in qfs])
    return poff, t, s, e


def gram_packed(pa, pb, n, m, k, mode=PRODUCT):
    """``out[j, l] = sum_i <A[i, j], B[i, l]>`` for row-major packed matrices."""
    fn = _pick(_gram_loop, _gram_numpy)
    return fn(*pa, *pb, n, m, k, mode)


def rowwise_packed(pa, pb, mode=PRODUCT):
    """Per-row integrals between two equally long packed vectors."""
    fn = _pick(_rowwise_loop, _rowwise_numpy)
    return fn(*pa, *pb, mode)


def sample_inverse_cdf(t, s, e, u):
    """Map uniforms ``u`` through a piecewise-linear quantile function."""
    return _pick(_sample_loop, _sample_numpy)(t, s, e, np.ascontiguousarray(u, dtype=np.float64))
