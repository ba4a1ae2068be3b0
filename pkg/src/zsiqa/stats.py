"""Correlation statistics and the optional logistic score mapping.

PLCC/SRCC/KRCC are implemented directly: Pearson over raw values,
Spearman as Pearson over average-ranks, and Kendall tau-b via Knight's
O(n log n) merge-sort counting with full tie correction.
"""

from __future__ import annotations

from collections import Counter

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateInputError, FitError


def average_ranks(a) -> np.ndarray:
    """Fractional ranks (1-based); tied values receive their average rank."""
    a = np.asarray(a, dtype=np.float64)
    n = a.size
    order = np.argsort(a, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _as_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInputError(f"expected equal-length 1-D inputs, got {x.shape} and {y.shape}")
    if x.size < 3:
        raise DegenerateInputError(f"need at least 3 samples, got {x.size}")
    return x, y


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    x, y = _as_pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.dot(dx, dx)
    sy = np.dot(dy, dy)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInputError("pearson is undefined for zero-variance input")
    return float(np.dot(dx, dy) / np.sqrt(sx * sy))


def spearman(x, y) -> float:
    """Spearman rank correlation: Pearson over average ranks."""
    x, y = _as_pair(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def _merge_count(a: list) -> tuple[list, int]:
    # Counts pairs i < j with a[i] > a[j] while merge-sorting.
    n = len(a)
    if n <= 1:
        return a, 0
    mid = n // 2
    left, inv_l = _merge_count(a[:mid])
    right, inv_r = _merge_count(a[mid:])
    merged = []
    inv = inv_l + inv_r
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            inv += len(left) - i
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inv


def _tie_term(values) -> int:
    counts = Counter(values)
    return sum(t * (t - 1) // 2 for t in counts.values())


def kendall_tau_b(x, y) -> float:
    """Kendall rank correlation tau-b with tie correction."""
    x, y = _as_pair(x, y)
    n = x.size
    order = np.lexsort((y, x))
    y_sorted = y[order].tolist()
    _, discordant = _merge_count(y_sorted)
    n0 = n * (n - 1) // 2
    n1 = _tie_term(x.tolist())
    n2 = _tie_term(y.tolist())
    n3 = _tie_term(zip(x.tolist(), y.tolist()))
    denom = (n0 - n1) * (n0 - n2)
    if denom <= 0:
        raise DegenerateInputError("kendall tau-b is undefined when all pairs are tied")
    concordant_minus_discordant = n0 - n1 - n2 + n3 - 2 * discordant
    return float(concordant_minus_discordant / np.sqrt(denom))


def _logistic4(beta, s):
    b1, b2, b3, b4 = beta
    z = np.clip(b2 * (s - b3), -500.0, 500.0)
    return b1 * (0.5 - 1.0 / (1.0 + np.exp(z))) + b4


def fit_logistic4(scores, mos, max_nfev: int = 5000) -> np.ndarray:
    """Least-squares 4-parameter logistic mapping of scores onto MOS.

    Initialization: b1 = range(mos), b2 = 1/std(scores), b3 = mean(scores),
    b4 = mean(mos).  Returns the mapped scores; raises FitError when the
    scores are constant or the optimizer fails to converge.
    """
    s = np.asarray(scores, dtype=np.float64)
    m = np.asarray(mos, dtype=np.float64)
    if s.shape != m.shape or s.ndim != 1 or s.size < 5:
        raise DegenerateInputError("logistic fit needs >= 5 paired samples")
    std = s.std()
    if std == 0.0:
        raise FitError("scores are constant; logistic mapping is degenerate")
    x0 = np.array([m.max() - m.min(), 1.0 / std, s.mean(), m.mean()], dtype=np.float64)
    result = least_squares(lambda beta: _logistic4(beta, s) - m, x0, max_nfev=max_nfev)
    if not result.success:
        raise FitError(f"logistic fit did not converge: {result.message}")
    return _logistic4(result.x, s)
