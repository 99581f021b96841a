"""Histograms and their piecewise-linear quantile functions.

A histogram is read as a mixture of uniform densities, one per bin, so its
quantile function is linear on each bin's cumulative-mass interval. Point values
are zero-width bins and give flat pieces. All integrals here are exact
piecewise-polynomial sums.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, InvalidHistogram

WEIGHT_TOL = 1e-6
MONOTONE_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Bin:
    lower: float
    upper: float
    weight: float


def histogram_problems(lower, upper, weight) -> list[str]:
    """All violated histogram invariants, as human-readable strings."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    weight = np.asarray(weight, dtype=float)
    if not (lower.ndim == upper.ndim == weight.ndim == 1) or not (lower.size == upper.size == weight.size):
        return ["bin arrays must be 1-D and of equal length"]
    if lower.size == 0:
        return ["histogram has no bins"]
    out = []
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper)) and np.all(np.isfinite(weight))):
        out.append("non-finite bin bound or weight")
        return out
    for k in np.flatnonzero(lower > upper):
        out.append(f"bin {k}: lower {lower[k]:g} > upper {upper[k]:g}")
    for k in np.flatnonzero(weight <= 0):
        out.append(f"bin {k}: weight {weight[k]:g} is not positive")
    for k in np.flatnonzero(upper[:-1] > lower[1:]):
        out.append(f"bins {k} and {k + 1} overlap or are out of order ({upper[k]:g} > {lower[k + 1]:g})")
    total = weight.sum()
    if abs(total - 1.0) > WEIGHT_TOL:
        out.append(f"weights sum to {total:.6g}, not 1")
    return out


@dataclass(frozen=True, eq=False)
class Histogram:
    """Ordered, disjoint weighted bins. Weights within 1e-6 of unit mass are renormalized."""

    lower: np.ndarray
    upper: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        problems = histogram_problems(self.lower, self.upper, self.weight)
        if problems:
            raise InvalidHistogram("; ".join(problems))
        w = np.asarray(self.weight, dtype=float)
        total = w.sum()
        # leave already-normalized weights bit-identical so serialization round-trips
        if abs(total - 1.0) > 1e-12:
            w = w / total
        object.__setattr__(self, "lower", _frozen(self.lower))
        object.__setattr__(self, "upper", _frozen(self.upper))
        object.__setattr__(self, "weight", _frozen(w))

    @classmethod
    def from_bins(cls, bins: Iterable) -> Histogram:
        """Build from :class:`Bin` objects or ``(lower, upper, weight)`` triples."""
        rows = [(b.lower, b.upper, b.weight) if isinstance(b, Bin) else tuple(b) for b in bins]
        if not rows:
            raise InvalidHistogram("histogram has no bins")
        a, b, w = zip(*rows)
        return cls(np.array(a, float), np.array(b, float), np.array(w, float))

    @classmethod
    def point(cls, x: float) -> Histogram:
        return cls(np.array([x], float), np.array([x], float), np.array([1.0]))

    @classmethod
    def interval(cls, a: float, b: float) -> Histogram:
        return cls(np.array([a], float), np.array([b], float), np.array([1.0]))

    @property
    def bins(self) -> tuple[Bin, ...]:
        return tuple(Bin(float(a), float(b), float(w)) for a, b, w in zip(self.lower, self.upper, self.weight))

    def __len__(self):
        return self.lower.size

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return (
            np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and np.array_equal(self.weight, other.weight)
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes(), self.weight.tobytes()))

    @cached_property
    def mean(self) -> float:
        return float(np.sum(self.weight * (self.lower + self.upper)) / 2.0)

    @cached_property
    def second_moment(self) -> float:
        a, b = self.lower, self.upper
        return float(np.sum(self.weight * (a * a + a * b + b * b)) / 3.0)

    def centered_second_moments(self, about: float) -> np.ndarray:
        """Per-bin ``E[(x - about)^2]`` under a uniform density on each bin."""
        a = self.lower - about
        b = self.upper - about
        return (a * a + a * b + b * b) / 3.0

    @cached_property
    def quantile_function(self) -> QuantileFunction:
        return build_quantile_function(self)


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Function on [0, 1], linear on each ``[t[k], t[k+1]]``, possibly discontinuous at breakpoints.

    ``start[k]`` and ``end[k]`` are the values at the two ends of piece ``k``.
    Residual functions and other signed combinations of quantile functions use
    this type directly.
    """

    t: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        t = _frozen(self.t)
        s = _frozen(self.start)
        e = _frozen(self.end)
        if t.ndim != 1 or s.ndim != 1 or t.size != s.size + 1 or s.size != e.size or s.size == 0:
            raise InvalidHistogram("piecewise-linear arrays have inconsistent shapes")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise InvalidHistogram("breakpoints must increase strictly from 0 to 1")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "end", e)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.t)

    @property
    def knots_t(self) -> np.ndarray:
        return self.t

    @property
    def knots_x(self) -> np.ndarray:
        """Value at each breakpoint, taking the left limit at interior ones."""
        return np.concatenate([self.start[:1], self.end])

    @property
    def is_continuous(self) -> bool:
        return bool(np.allclose(self.end[:-1], self.start[1:], rtol=0, atol=1e-12))

    @cached_property
    def mean(self) -> float:
        return float(np.sum(self.widths * (self.start + self.end)) / 2.0)

    @cached_property
    def second_moment(self) -> float:
        s, e = self.start, self.end
        return float(np.sum(self.widths * (s * s + s * e + e * e)) / 3.0)

    @cached_property
    def variance(self) -> float:
        s = self.start - self.mean
        e = self.end - self.mean
        return max(float(np.sum(self.widths * (s * s + s * e + e * e)) / 3.0), 0.0)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    def __call__(self, t):
        return qf_eval(self, t)

    def _with(self, start, end):
        return PiecewiseLinear(self.t, start, end)

    def __add__(self, other):
        if isinstance(other, PiecewiseLinear):
            return combine([self, other], [1.0, 1.0])
        return self._with(self.start + other, self.end + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PiecewiseLinear):
            return combine([self, other], [1.0, -1.0])
        return self._with(self.start - other, self.end - other)

    def __rsub__(self, other):
        return self._with(other - self.start, other - self.end)

    def __neg__(self):
        return PiecewiseLinear(self.t, -self.start, -self.end)

    def __mul__(self, c):
        return self._with(self.start * c, self.end * c) if c >= 0 else PiecewiseLinear(self.t, self.start * c, self.end * c)

    __rmul__ = __mul__

    def allclose(self, other, atol=1e-12) -> bool:
        """Same breakpoints and piece values within ``atol``."""
        return (
            self.t.size == other.t.size
            and np.allclose(self.t, other.t, rtol=0, atol=atol)
            and np.allclose(self.start, other.start, rtol=0, atol=atol)
            and np.allclose(self.end, other.end, rtol=0, atol=atol)
        )

    def to_quantile(self) -> QuantileFunction:
        return QuantileFunction(self.t, self.start, self.end)

    def __repr__(self):
        return f"{type(self).__name__}(pieces={self.start.size}, mean={self.mean:.6g}, std={self.std:.6g})"


class QuantileFunction(PiecewiseLinear):
    """A non-decreasing :class:`PiecewiseLinear` (round-off up to 1e-9 relative is tolerated)."""

    def __post_init__(self):
        super().__post_init__()
        s, e = self.start, self.end
        tol = MONOTONE_TOL * (1.0 + max(np.max(np.abs(s)), np.max(np.abs(e))))
        if np.any(e - s < -tol) or np.any(s[1:] - e[:-1] < -tol):
            raise InvalidHistogram("quantile function must be non-decreasing")

    def _with(self, start, end):
        return QuantileFunction(self.t, start, end)


def build_quantile_function(h: Histogram) -> QuantileFunction:
    """Quantile function of a histogram, one linear piece per bin."""
    if not isinstance(h, Histogram):
        raise InvalidHistogram(f"expected a Histogram, got {type(h).__name__}")
    t = np.empty(h.weight.size + 1)
    t[0] = 0.0
    np.cumsum(h.weight, out=t[1:])
    t[-1] = 1.0
    return QuantileFunction(t, h.lower, h.upper)


def qf_eval(q: PiecewiseLinear, t):
    """Evaluate at ``t`` in [0, 1]; interior breakpoints take the left limit."""
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    idx = np.searchsorted(q.t, arr, side="left") - 1
    idx = np.clip(idx, 0, q.start.size - 1)
    t0 = q.t[idx]
    val = q.start[idx] + (q.end[idx] - q.start[idx]) * ((arr - t0) / (q.t[idx + 1] - t0))
    return float(val) if np.ndim(val) == 0 else val


def qf_moments(q: PiecewiseLinear) -> tuple[float, float]:
    """``(mean, std)`` of the distribution a quantile function describes."""
    return q.mean, q.std


def qf_center(q: QuantileFunction) -> QuantileFunction:
    """Shift by minus the mean."""
    m = q.mean
    return type(q)(q.t, q.start - m, q.end - m)


def qf_symmetric(q: QuantileFunction) -> QuantileFunction:
    """Quantile function of the reflected distribution, ``-q(1 - t)``."""
    t = 1.0 - q.t[::-1]
    t[0], t[-1] = 0.0, 1.0
    return type(q)(t, -q.end[::-1], -q.start[::-1])


def common_grid(qs: Sequence[PiecewiseLinear]) -> np.ndarray:
    """Union of all breakpoints (deduplicated at 1e-12); every input is linear between them."""
    if len(qs) == 0:
        raise DomainError("common_grid needs at least one function")
    return kernels.union_grid(*[q.t for q in qs])


def combine(qs: Sequence[PiecewiseLinear], coeffs, const: float = 0.0) -> PiecewiseLinear:
    """``const + sum_j coeffs[j] * qs[j]`` on the common grid."""
    grid = common_grid(qs)
    start = np.full(grid.size - 1, float(const))
    end = start.copy()
    for q, c in zip(qs, coeffs):
        if c == 0.0:
            continue
        s, e = kernels.eval_on_grid(q.t, q.start, q.end, grid)
        start += c * s
        end += c * e
    return PiecewiseLinear(grid, start, end)


def constant(c: float) -> QuantileFunction:
    return QuantileFunction(np.array([0.0, 1.0]), np.array([c]), np.array([c]))
