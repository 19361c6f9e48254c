"""V-empirical distribution functions and the integral/Kolmogorov statistics.

For a sample ``X_1..X_n`` the two V-empirical d.f.'s are

    H_n(t) = n^-3 #{(j,k,l) : max(X_j, X_k, X_l) < t}
    G_n(t) = n^-4 #{(i,j,k,l) : X_i + med(X_j, X_k, X_l) < t}

and the test statistics are ``I_n = mean_m (H_n - G_n)(X_m)`` and
``K_n = sup_t |H_n(t) - G_n(t)|``.  All counting is exact integer
arithmetic; the only rounding happens in the final division.

Two identities make the fast paths possible.  With ``q`` the strict ECDF at
``u``, the fraction of ordered triples whose maximum is below ``u`` is
``q**3`` and the fraction whose median is below ``u`` is
``phi(q) = 3 q**2 - 2 q**3``.  Both hold with ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from numba import njit

__all__ = [
    "SortedSample",
    "StatisticPair",
    "MedianWeights",
    "NaiveSizeError",
    "NAIVE_MAX_N",
    "ecdf_strict",
    "h_fn",
    "g_fn",
    "median_weights",
    "statistic_i",
    "statistic_k",
    "statistics",
    "statistic_i_naive",
    "statistic_k_naive",
]

NAIVE_MAX_N = 40


class NaiveSizeError(ValueError):
    """Raised when brute-force enumeration is requested for too large a sample."""


@dataclass(frozen=True)
class SortedSample:
    """Nonnegative observations stored in ascending order.

    Duplicates are kept.  Construct with :meth:`from_values` (or directly;
    the constructor sorts and validates too).
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64).ravel()
        if arr.size == 0:
            raise ValueError("sample must contain at least one observation")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample contains non-finite values")
        if np.any(arr < 0):
            raise ValueError("sample contains negative values")
        arr.sort()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, data) -> "SortedSample":
        return cls(np.asarray(data, dtype=np.float64))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def scaled(self, c: float) -> "SortedSample":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return SortedSample(self.values * c)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class StatisticPair:
    i_value: float
    k_value: float
    k_argmax: float


@dataclass(frozen=True)
class MedianWeights:
    """Number of ordered triples whose median is the r-th order statistic."""

    weights: np.ndarray
    total: int


def _as_sample(s) -> SortedSample:
    return s if isinstance(s, SortedSample) else SortedSample.from_values(s)


def _phi(q):
    return 3.0 * q**2 - 2.0 * q**3


def ecdf_strict(s: SortedSample, t: float) -> float:
    """Fraction of observations strictly below ``t``."""
    s = _as_sample(s)
    return np.searchsorted(s.values, t, side="left") / s.n


def h_fn(s: SortedSample, t: float) -> float:
    """``H_n(t)``: the maximum of a triple is below ``t`` iff all three are."""
    return ecdf_strict(s, t) ** 3


def g_fn(s: SortedSample, t: float) -> float:
    """``G_n(t)`` via ``(1/n) sum_i phi(#{j : X_i + X_j < t} / n)``."""
    s = _as_sample(s)
    x = s.values
    # comparisons in the X_i + X_j < t form, matching the tuple definition bit for bit
    counts = np.count_nonzero(np.add.outer(x, x) < t, axis=1)
    return float(np.mean(_phi(counts / s.n)))


def _cumulative_median_counts(r: np.ndarray, n: int) -> np.ndarray:
    # n^3 * phi(r/n): ordered triples with median among the r smallest values
    r = r.astype(np.int64)
    return 3 * n * r * r - 2 * r * r * r


def median_weights(s: SortedSample) -> MedianWeights:
    """Triple counts per rank, built from cumulative (strict/weak) counts.

    For distinct values this is ``6(r-1)(n-r) + 3n - 2``.  With ties the
    per-rank split inside a tie group is arbitrary, but the group total is
    exact, and that is all any consumer uses (events at one location are
    always aggregated).
    """
    s = _as_sample(s)
    n = s.n
    x = s.values
    ranks = np.arange(n + 1)
    cum = _cumulative_median_counts(ranks, n)
    weights = np.diff(cum)
    # regroup tied ranks: total over a tie block is cum[weak] - cum[strict]
    strict = np.searchsorted(x, x, side="left")
    weak = np.searchsorted(x, x, side="right")
    group_total = cum[weak] - cum[strict]
    first = strict == np.arange(n)
    tied = weak - strict > 1
    if np.any(tied):
        weights = np.where(tied, 0, weights)
        weights[first & tied] = group_total[first & tied]
    return MedianWeights(weights=weights.astype(np.int64), total=n**3)


@njit(cache=True)
def _i_numerator(x):
    # sum_m [ n * a_m^3 - sum_i (3 n c_mi^2 - 2 c_mi^3) ], where
    # a_m = #{j : x_j < x_m} and c_mi = #{j : x_i + x_j < x_m}
    n = x.shape[0]
    total = 0.0
    a = 0
    for m in range(n):
        xm = x[m]
        while a < n and x[a] < xm:
            a += 1
        row = n * a * a * a
        c = n
        for i in range(n):
            xi = x[i]
            while c > 0 and xi + x[c - 1] >= xm:
                c -= 1
            if c == 0:
                break
            row -= 3 * n * c * c - 2 * c * c * c
        total += row
    return total


@njit(cache=True)
def _k_sweep(x, w):
    n = x.shape[0]
    m = n * n
    loc = np.empty(m, dtype=np.float64)
    wt = np.empty(m, dtype=np.int64)
    for i in range(n):
        for r in range(n):
            loc[i * n + r] = x[i] + x[r]
            wt[i * n + r] = w[r]
    order = np.argsort(loc)
    p = 0
    q = 0
    hc = 0
    gc = 0
    best = -1
    best_t = 0.0
    while p < m or q < n:
        if q < n and (p >= m or x[q] <= loc[order[p]]):
            e = x[q]
        else:
            e = loc[order[p]]
        while q < n and x[q] == e:
            hc += 1
            q += 1
        while p < m and loc[order[p]] == e:
            gc += wt[order[p]]
            p += 1
        d = n * hc * hc * hc - gc
        if d < 0:
            d = -d
        if d > best:
            best = d
            best_t = e
    return best, best_t


def statistic_i(s: SortedSample) -> float:
    """Integral statistic ``I_n`` in O(n^2) time, O(1) extra space."""
    s = _as_sample(s)
    n = s.n
    return float(_i_numerator(s.values)) / float(n) ** 5


def statistic_k(s: SortedSample) -> tuple[float, float]:
    """Kolmogorov statistic ``K_n`` and the event location attaining it.

    ``D = H_n - G_n`` is a left-continuous step function that jumps only at
    sample values and pairwise sums, so the supremum is the largest ``|D|``
    over right-limits at those events.  Ties resolve to the smallest event.
    """
    s = _as_sample(s)
    n = s.n
    w = median_weights(s).weights
    best, best_t = _k_sweep(s.values, w)
    return float(best) / float(n) ** 4, float(best_t)


def statistics(s) -> StatisticPair:
    s = _as_sample(s)
    k, t = statistic_k(s)
    return StatisticPair(i_value=statistic_i(s), k_value=k, k_argmax=t)


def _enumerate(s: SortedSample) -> tuple[np.ndarray, np.ndarray]:
    n = s.n
    if n > NAIVE_MAX_N:
        raise NaiveSizeError(
            f"brute-force enumeration limited to n <= {NAIVE_MAX_N}, got n={n}"
        )
    x = s.values
    triples = np.array(list(product(x, repeat=3)), dtype=np.float64).reshape(-1, 3)
    maxes = np.sort(triples.max(axis=1))
    meds = np.sort(triples, axis=1)[:, 1]
    quads = np.sort((x[:, None] + meds[None, :]).ravel())
    return maxes, quads


def _naive_d(maxes, quads, t):
    h = np.searchsorted(maxes, t, side="left") / maxes.size
    g = np.searchsorted(quads, t, side="left") / quads.size
    return h - g


def statistic_i_naive(s: SortedSample) -> float:
    """Literal tuple enumeration of ``I_n``; test oracle only."""
    s = _as_sample(s)
    maxes, quads = _enumerate(s)
    return float(np.mean(_naive_d(maxes, quads, s.values)))


def statistic_k_naive(s: SortedSample) -> float:
    """Literal tuple enumeration of ``K_n``; test oracle only.

    D is left-continuous, so evaluating it *at* every jump point (plus one
    point past the last) visits every value it takes.
    """
    s = _as_sample(s)
    maxes, quads = _enumerate(s)
    points = np.unique(np.concatenate([maxes, quads]))
    points = np.append(points, points[-1] + 1.0)
    return float(np.max(np.abs(_naive_d(maxes, quads, points))))
