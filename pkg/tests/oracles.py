"""Independent reference implementations used to check the real code.

Everything here is written the slow, obvious way on purpose: exhaustive
scans, full sorts, generic optimizers.  Tests compare the package
against these, never the other way around.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize


def brute_frequency(concept_sets: list[set[int]], concept: int) -> int:
    return sum(1 for s in concept_sets if concept in s)


def brute_cooccurrence(concept_sets: list[set[int]], query: set[int]) -> int:
    return sum(1 for s in concept_sets if query <= s)


def presence_matrix(concept_sets: list[set[int]], vocab_size: int) -> np.ndarray:
    mat = np.zeros((len(concept_sets), vocab_size), dtype=bool)
    for i, s in enumerate(concept_sets):
        for c in s:
            mat[i, c] = True
    return mat


def matrix_cooccurrence(mat: np.ndarray, query: set[int]) -> int:
    return int(mat[:, sorted(query)].all(axis=1).sum())


def full_sort_rank(sims: np.ndarray, gt_rows) -> int:
    """Rank by explicit full sort: descending similarity, ties by row index."""
    order = sorted(range(len(sims)), key=lambda i: (-float(sims[i]), i))
    position = {row: r + 1 for r, row in enumerate(order)}
    return min(position[int(g)] for g in gt_rows)


def geometric_mean_direct(freqs) -> float:
    prod = 1.0
    for f in freqs:
        prod *= float(f)
    return prod ** (1.0 / len(freqs))


def quantile_interp(values, q: float) -> float:
    """Linear interpolation of order statistics, the textbook way."""
    vals = sorted(float(v) for v in values)
    pos = (len(vals) - 1) * q
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return vals[lo]
    frac = pos - lo
    return vals[lo] * (1.0 - frac) + vals[hi] * frac


def iqr_mask_linear(values, multiplier: float = 1.5) -> list[bool]:
    q1 = quantile_interp(values, 0.25)
    q3 = quantile_interp(values, 0.75)
    iqr = q3 - q1
    lo = q1 - multiplier * iqr
    hi = q3 + multiplier * iqr
    return [lo <= float(v) <= hi for v in values]


def reference_logistic_fit(x, y, ridge: float = 1e-6) -> tuple[float, float]:
    """Penalized logistic MLE through a generic optimizer."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    def nll(beta):
        eta = beta[0] + beta[1] * x
        return float(np.sum(np.logaddexp(0.0, eta) - y * eta) + 0.5 * ridge * np.dot(beta, beta))

    def grad(beta):
        eta = beta[0] + beta[1] * x
        p = 1.0 / (1.0 + np.exp(-eta))
        resid = p - y
        return np.array([np.sum(resid), np.sum(resid * x)]) + ridge * beta

    res = minimize(nll, np.zeros(2), jac=grad, method="BFGS", options={"maxiter": 500})
    return float(res.x[0]), float(res.x[1])


def bernoulli_loglik(beta0: float, beta1: float, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    eta = beta0 + beta1 * x
    return float(-np.sum(np.logaddexp(0.0, eta) - y * eta))
