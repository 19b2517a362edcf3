"""Two-sample Kolmogorov-Smirnov test.

Statistic, asymptotic p-value with the small-sample correction factor,
and a significance verdict at a caller-chosen alpha. Ties are handled by
standard right-continuous ECDF evaluation (viewer counts are integers,
so ties are the norm); no jittering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class EmptySample(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class KsResult:
    d: float
    p: float
    n1: int
    n2: int
    significant: bool


def ks_statistic(a, b) -> float:
    """D = sup_x |F_a(x) - F_b(x)| over right-continuous empirical CDFs."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySample("both samples must be non-empty")
    a_sorted = np.sort(a)
    b_sorted = np.sort(b)
    # the sup is attained at a sample value
    pts = np.concatenate([a_sorted, b_sorted])
    cdf_a = np.searchsorted(a_sorted, pts, side="right") / a.size
    cdf_b = np.searchsorted(b_sorted, pts, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_pvalue(d: float, n1: int, n2: int) -> float:
    """Asymptotic two-sample p-value.

    n_e = n1*n2/(n1+n2); lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) * d;
    Q(lambda) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2), truncated
    when a term falls below 1e-12 in magnitude or k exceeds 100. Result
    clamped to [0, 1]; Q(0) is 1.
    """
    if not (0.0 <= d <= 1.0):
        raise DomainError(f"d must be in [0, 1], got {d}")
    if n1 < 1 or n2 < 1:
        raise DomainError("sample sizes must be >= 1")
    if d == 0.0:
        return 1.0
    n_e = n1 * n2 / (n1 + n2)
    lam = (math.sqrt(n_e) + 0.12 + 0.11 / math.sqrt(n_e)) * d
    total = 0.0
    sign = 1.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < 1e-12:
            break
        sign = -sign
    p = 2.0 * total
    return min(1.0, max(0.0, p))


def ks_test(a, b, alpha: float = 0.05) -> KsResult:
    """Run the two-sample test; significant iff p <= alpha."""
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    d = ks_statistic(a, b)
    n1, n2 = len(a), len(b)
    p = ks_pvalue(d, n1, n2)
    return KsResult(d=d, p=p, n1=n1, n2=n2, significant=p <= alpha)
