"""Dispersion metrics and the Wilcoxon signed-rank test.

The signed-rank test is exact by default up to 25 effective pairs: zero
differences are dropped, tied magnitudes share average ranks, and the null
distribution of the positive-rank sum is enumerated by dynamic programming
over achievable rank sums. Larger samples switch to the normal
approximation with continuity and tie corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllZeroDifferences, ConfigError, DegenerateWorld, DimensionMismatch

ALTERNATIVES = ("two_sided", "greater", "less")
EXACT_LIMIT = 25


def mean_pairwise_distance(positions: np.ndarray) -> float:
    """Mean Euclidean distance over all unordered agent pairs."""
    p = np.asarray(positions, dtype=np.float64)
    n = p.shape[0]
    if p.ndim != 2 or n < 2:
        raise DegenerateWorld("need at least two agents for pairwise distances")
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt((diff**2).sum(axis=2))
    iu = np.triu_indices(n, k=1)
    return float(d[iu].mean())


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float  # sample standard deviation (n-1); 0.0 when n == 1
    n: int


def summarize(values) -> Summary:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("summarize needs a non-empty 1-D sequence")
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return Summary(mean=float(v.mean()), std=std, n=int(v.size))


@dataclass(frozen=True)
class TestResult:
    statistic: float  # W: sum of ranks of positive differences
    p_value: float
    n_effective: int
    method: str  # "exact" | "normal_approx"
    alternative: str


def _doubled_ranks(magnitudes: np.ndarray) -> np.ndarray:
    """Average ranks of |d| with ties, doubled so they stay integers."""
    order = np.argsort(magnitudes, kind="stable")
    doubled = np.empty(len(magnitudes), dtype=np.int64)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and magnitudes[order[j + 1]] == magnitudes[order[i]]:
            j += 1
        # ranks i+1 .. j+1 tie; twice their average is (i+1) + (j+1)
        doubled[order[i : j + 1]] = i + j + 2
        i = j + 1
    return doubled


def _exact_p(doubled_ranks: np.ndarray, w_doubled: int, alternative: str) -> float:
    """Exact tail probability of the positive-rank sum under random signs."""
    total = int(doubled_ranks.sum())
    ways = np.zeros(total + 1, dtype=np.int64)
    ways[0] = 1
    for r in doubled_ranks.tolist():
        shifted = np.concatenate([np.zeros(r, dtype=np.int64), ways[: total + 1 - r]])
        ways = ways + shifted
    denom = float(2 ** len(doubled_ranks))
    p_ge = float(ways[w_doubled:].sum()) / denom
    p_le = float(ways[: w_doubled + 1].sum()) / denom
    if alternative == "greater":
        return p_ge
    if alternative == "less":
        return p_le
    return min(1.0, 2.0 * min(p_ge, p_le))


def _normal_p(n: int, w: float, tie_sizes: list[int], alternative: str) -> float:
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - sum(t**3 - t for t in tie_sizes) / 48.0
    sd = math.sqrt(var)

    def upper(value: float) -> float:  # P(W >= value), continuity corrected
        return 0.5 * math.erfc((value - 0.5 - mean) / (sd * math.sqrt(2.0)))

    def lower(value: float) -> float:  # P(W <= value)
        return 0.5 * math.erfc(-(value + 0.5 - mean) / (sd * math.sqrt(2.0)))

    if alternative == "greater":
        return upper(w)
    if alternative == "less":
        return lower(w)
    return min(1.0, 2.0 * min(upper(w), lower(w)))


def wilcoxon_signed_rank(x, y, alternative: str = "two_sided", method: str = "auto") -> TestResult:
    """Paired signed-rank test of x against y.

    method "auto" enumerates the exact null for up to 25 effective pairs
    and falls back to the corrected normal approximation beyond that;
    "exact" and "normal" force either path.
    """
    if alternative not in ALTERNATIVES:
        raise ConfigError(f"alternative must be one of {ALTERNATIVES}")
    if method not in ("auto", "exact", "normal"):
        raise ConfigError("method must be auto, exact, or normal")
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1 or xv.size == 0:
        raise DimensionMismatch("x and y must be equal-length non-empty 1-D sequences")

    d = xv - yv
    d = d[d != 0.0]
    n = int(d.size)
    if n == 0:
        raise AllZeroDifferences("every paired difference is zero")

    doubled = _doubled_ranks(np.abs(d))
    w_doubled = int(doubled[d > 0].sum())
    w = w_doubled / 2.0

    use_exact = method == "exact" or (method == "auto" and n <= EXACT_LIMIT)
    if use_exact and n > 62:
        raise ConfigError("exact enumeration supports at most 62 effective pairs")
    if use_exact:
        p = _exact_p(doubled, w_doubled, alternative)
        used = "exact"
    else:
        _, counts = np.unique(np.abs(d), return_counts=True)
        p = _normal_p(n, w, counts.tolist(), alternative)
        used = "normal_approx"
    return TestResult(
        statistic=w,
        p_value=min(1.0, p),
        n_effective=n,
        method=used,
        alternative=alternative,
    )


def wilcoxon_one_sample(x, m0: float, alternative: str = "two_sided", method: str = "auto") -> TestResult:
    """Signed-rank test of a sample against the constant m0."""
    xv = np.asarray(x, dtype=np.float64)
    return wilcoxon_signed_rank(xv, np.full_like(xv, m0), alternative, method)
