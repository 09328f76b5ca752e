"""Eigenvalue counts over ensembles: Poisson and independence tests, Wegner/Minami ratios,
large-deviation frequencies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .._validation import check_disjoint, check_interval

__all__ = [
    "MIN_EXPECTED",
    "CountRecord",
    "interval_counts",
    "poisson_bins",
    "ChiSquareResult",
    "PoissonCountTest",
    "poisson_count_test",
    "IndependenceTest",
    "independence_test",
    "wegner_estimator",
    "minami_estimator",
    "large_deviation_check",
]

MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class CountRecord:
    """Counts in ``p`` pairwise disjoint intervals for one realization."""

    counts: Tuple[int, ...]
    realization: int = 0

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if any(v < 0 for v in c):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", c)


def interval_counts(points, intervals: Sequence, realization: int = 0) -> CountRecord:
    """Counts of ``points`` in half-open, pairwise disjoint intervals ``[a, b)``."""
    check_disjoint(intervals)
    pts = np.asarray(points, dtype=np.float64)
    counts = []
    for iv in intervals:
        a, b = check_interval(iv)
        counts.append(int(np.count_nonzero((pts >= a) & (pts < b))))
    return CountRecord(tuple(counts), realization)


def _as_matrix(ensemble) -> np.ndarray:
    if len(ensemble) and isinstance(ensemble[0], CountRecord):
        return np.array([r.counts for r in ensemble], dtype=np.int64)
    m = np.asarray(ensemble, dtype=np.int64)
    return m[:, None] if m.ndim == 1 else m


def poisson_bins(mu: float, n: int, min_expected: float = MIN_EXPECTED) -> List[Tuple[int, float]]:
    """Contiguous count bins for Poisson(``mu``) with expected frequency >= ``min_expected``.

    Returns ``(first_k, probability)`` per bin; the last bin is open-ended
    (``k >= first_k``). Adjacent cells are pooled from the left, and a short
    tail is folded into its neighbour.
    """
    kmax = int(stats.poisson.ppf(1 - 1e-12, mu)) + 2 if mu > 0 else 1
    pmf = stats.poisson.pmf(np.arange(kmax), mu)
    bins: List[List[float]] = []
    start, acc = 0, 0.0
    for k in range(kmax):
        acc += pmf[k]
        if acc * n >= min_expected:
            bins.append([start, acc])
            start, acc = k + 1, 0.0
    tail = stats.poisson.sf(start - 1, mu) if start > 0 else 1.0
    if bins and tail * n < min_expected:
        bins[-1][1] += tail
    else:
        bins.append([start, tail])
    # ensure the last bin absorbs everything from its start upward
    first = bins[-1][0]
    bins[-1][1] = stats.poisson.sf(first - 1, mu) if first > 0 else 1.0
    return [(int(k), float(p)) for k, p in bins]


def _bin_index(counts: np.ndarray, bins) -> np.ndarray:
    edges = np.array([b[0] for b in bins])
    return np.searchsorted(edges, counts, side="right") - 1


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    pvalue: float
    dof: int
    observed: Tuple[int, ...] = ()
    expected: Tuple[float, ...] = ()


@dataclass(frozen=True)
class PoissonCountTest:
    per_interval: Tuple[ChiSquareResult, ...]
    joint: Optional[ChiSquareResult] = None
    n: int = 0

    def passes(self, alpha: float = 0.01) -> bool:
        tests = list(self.per_interval) + ([self.joint] if self.joint is not None else [])
        return all(t.pvalue > alpha for t in tests)

    @property
    def min_pvalue(self) -> float:
        tests = list(self.per_interval) + ([self.joint] if self.joint is not None else [])
        return min(t.pvalue for t in tests)


def _gof(obs: np.ndarray, probs: np.ndarray, n: int) -> ChiSquareResult:
    exp = probs * n
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    p = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return ChiSquareResult(stat, p, dof, tuple(int(o) for o in obs), tuple(float(e) for e in exp))


def poisson_count_test(
    ensemble,
    lengths: Sequence[float],
    min_expected: float = MIN_EXPECTED,
    joint: bool = True,
) -> PoissonCountTest:
    """Chi-square goodness of fit of per-interval counts to Poisson(``|I_n|``).

    ``ensemble`` is a sequence of :class:`CountRecord` or an ``(R, p)`` integer
    array. With ``joint=True`` and ``p > 1``, the joint frequency table is also
    compared to the product of the marginal Poisson laws (independence across
    intervals); marginal bins are merged until every product cell expects at
    least ``min_expected`` observations.
    """
    M = _as_matrix(ensemble)
    n, p = M.shape
    lengths = np.broadcast_to(np.asarray(lengths, dtype=np.float64), (p,))
    if n < 50:
        raise ValueError(f"ensemble of {n} realizations is too small (need >= 50)")
    per = []
    all_bins = []
    for i in range(p):
        bins = poisson_bins(lengths[i], n, min_expected)
        all_bins.append(bins)
        idx = _bin_index(M[:, i], bins)
        obs = np.bincount(idx, minlength=len(bins))
        per.append(_gof(obs, np.array([b[1] for b in bins]), n))
    joint_res = None
    if joint and p > 1:
        bins = [list(map(list, b)) for b in all_bins]
        while True:
            probs = [np.array([b[1] for b in bb]) for bb in bins]
            cell_min = np.prod([pr.min() for pr in probs]) * n
            if cell_min >= min_expected:
                break
            i = int(np.argmin([pr.min() if len(pr) > 1 else np.inf for pr in probs]))
            if len(bins[i]) <= 1:
                break
            j = int(np.argmin(probs[i]))
            k = j - 1 if j == len(bins[i]) - 1 else (j + 1 if j == 0 else (j - 1 if probs[i][j - 1] < probs[i][j + 1] else j + 1))
            lo, hi = min(j, k), max(j, k)
            bins[i][lo] = [bins[i][lo][0], bins[i][lo][1] + bins[i][hi][1]]
            del bins[i][hi]
        if all(len(bb) > 1 for bb in bins):
            idx = [_bin_index(M[:, i], bins[i]) for i in range(p)]
            shape = tuple(len(bb) for bb in bins)
            flat = np.ravel_multi_index(tuple(idx), shape)
            obs = np.bincount(flat, minlength=int(np.prod(shape)))
            prob = np.ones(())
            for bb in bins:
                prob = np.multiply.outer(prob, np.array([b[1] for b in bb]))
            joint_res = _gof(obs, prob.ravel(), n)
    return PoissonCountTest(tuple(per), joint_res, n)


@dataclass(frozen=True)
class IndependenceTest:
    pearson_r: float
    chi2: float
    pvalue: float
    dof: int


def independence_test(counts_a, counts_b, min_expected: float = MIN_EXPECTED) -> IndependenceTest:
    """Pearson correlation and contingency chi-square of two count sequences."""
    a = np.asarray(counts_a, dtype=np.int64)
    b = np.asarray(counts_b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("count sequences must be 1-D and aligned")
    n = len(a)
    if np.std(a) == 0 or np.std(b) == 0:
        r = 1.0 if np.array_equal(a, b) else float("nan")
    else:
        r = float(np.corrcoef(a, b)[0, 1])

    def cats(x):
        bins = poisson_bins(max(float(np.mean(x)), 1e-12), n, min_expected * 2)
        return _bin_index(x, bins), len(bins)

    ia, na = cats(a)
    ib, nb = cats(b)
    if na < 2 or nb < 2:
        return IndependenceTest(r, float("nan"), float("nan"), 0)
    table = np.zeros((na, nb), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    table = table[table.sum(1) > 0][:, table.sum(0) > 0]
    if min(table.shape) < 2:
        return IndependenceTest(r, float("nan"), float("nan"), 0)
    chi2, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return IndependenceTest(r, float(chi2), float(p), int(dof))


def wegner_estimator(counts, width: float, volume: int) -> float:
    """``mean(tr 1_J(H)) / (|J| |Lambda|)`` over the ensemble."""
    c = np.asarray(counts, dtype=np.float64)
    if not width > 0:
        raise ValueError("|J| must be positive")
    return float(np.mean(c) / (width * volume))


def minami_estimator(counts, width: float, volume: int, rho: float = 1.0) -> float:
    """``mean(k (k - 1)) / (|J| |Lambda|)^(1 + rho)`` over the ensemble."""
    c = np.asarray(counts, dtype=np.float64)
    if not width > 0:
        raise ValueError("|J| must be positive")
    return float(np.mean(c * (c - 1)) / (width * volume) ** (1 + rho))


def large_deviation_check(counts, mass: float, volume: int, delta: float) -> float:
    """Fraction of realizations with ``|count - N(I)|Lambda|| >= N(I)|Lambda| (log|Lambda|)^-delta``."""
    mean = mass * volume
    if mean < 10:
        raise ValueError(f"N(I)|Lambda| = {mean:.3g} < 10; the window is too small")
    c = np.asarray(counts, dtype=np.float64)
    thresh = mean * np.log(volume) ** (-delta)
    return float(np.mean(np.abs(c - mean) >= thresh))
