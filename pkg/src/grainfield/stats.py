"""Nonparametric statistics for paired rating data.

Wilcoxon signed-rank with an exact permutation distribution for small
samples (a dynamic program over achievable rank sums, exact also under
ties), a normal approximation with tie correction and continuity
correction for larger samples, and Holm's step-down multiple-comparison
correction.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, rankdata

from .errors import StatisticsError

EXACT_LIMIT = 25
MIN_NONZERO = 5

ALTERNATIVES = ("two-sided", "greater", "less")


def _exact_cdf_counts(double_ranks: np.ndarray) -> np.ndarray:
    """counts[s] = number of sign assignments with doubled positive-rank sum s.

    Ranks are doubled so tied (half-integer) average ranks become exact
    integers.  Sums of counts fit comfortably in int64 for n <= 25.
    """
    total = int(double_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in double_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: len(counts) - r]
        counts += shifted
    return counts


def wilcoxon_signed_rank(
    paired_a,
    paired_b,
    alternative: str = "two-sided",
    method: str = "auto",
) -> float:
    """p-value of the Wilcoxon signed-rank test for paired samples.

    Zero differences are dropped (Wilcoxon convention) and tied absolute
    differences receive average ranks.  With ``method='auto'`` the exact
    permutation distribution is used up to 25 non-zero differences and a
    tie-corrected normal approximation with continuity correction above.
    ``alternative='greater'`` tests for a > b.
    """
    if alternative not in ALTERNATIVES:
        raise StatisticsError(f"unknown alternative {alternative!r}")
    if method not in ("auto", "exact", "normal"):
        raise StatisticsError(f"unknown method {method!r}")
    a = np.asarray(paired_a, dtype=np.float64)
    b = np.asarray(paired_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StatisticsError("paired samples must be equal-length 1-D sequences")
    d = a - b
    d = d[d != 0.0]
    n = len(d)
    if n < MIN_NONZERO:
        raise StatisticsError(
            f"need at least {MIN_NONZERO} non-zero differences, got {n}"
        )
    ranks = rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    total = n * (n + 1) / 2.0

    if method == "exact" or (method == "auto" and n <= EXACT_LIMIT):
        double_ranks = np.round(2.0 * ranks).astype(np.int64)
        counts = _exact_cdf_counts(double_ranks)
        denom = float(2.0**n)
        s = int(round(2.0 * t_plus))
        cdf = float(counts[: s + 1].sum()) / denom  # P(T+ <= t)
        sf = float(counts[s:].sum()) / denom  # P(T+ >= t)
        if alternative == "greater":
            return min(1.0, sf)
        if alternative == "less":
            return min(1.0, cdf)
        return min(1.0, 2.0 * min(cdf, sf))

    # Normal approximation with tie correction and continuity correction.
    mu = total / 2.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    sigma = np.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term)
    if sigma == 0:
        raise StatisticsError("zero variance (all differences tied to one rank)")
    if alternative == "greater":
        z = (t_plus - mu - 0.5) / sigma
        return float(min(1.0, norm.sf(z)))
    if alternative == "less":
        z = (t_plus - mu + 0.5) / sigma
        return float(min(1.0, norm.cdf(z)))
    z = (abs(t_plus - mu) - 0.5) / sigma
    return float(min(1.0, 2.0 * norm.sf(z)))


def holm_correction(p_values) -> list[float]:
    """Holm step-down correction.

    The i-th smallest p is multiplied by (m - i), corrected values are
    made monotone non-decreasing in that order, clipped at 1, and returned
    in the original order.
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.ndim != 1:
        raise StatisticsError("p-values must be a 1-D sequence")
    if np.any((p < 0) | (p > 1)):
        raise StatisticsError("p-values must lie in [0, 1]")
    m = len(p)
    if m == 0:
        return []
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for i, idx in enumerate(order):
        value = min(1.0, (m - i) * p[idx])
        running = max(running, value)
        adjusted[idx] = running
    return [float(v) for v in adjusted]
