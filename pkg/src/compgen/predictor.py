"""Frequency-based prediction of per-sample retrieval success.

Pipeline: collapse a sample's per-concept corpus frequencies to a single
positive number (geometric mean), drop outliers by IQR fencing, then fit
a logistic regression of the binary retrieval outcome on log10 of that
number, with bootstrap confidence intervals and a likelihood-ratio test
for the slope.

The solver is iteratively reweighted least squares with a small ridge
term so perfectly separable data cannot diverge.  All replicate fits run
through one batched code path, so results are bit-identical across runs
and independent of scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import chi2
from sklearn.base import BaseEstimator

from .errors import FitError
from .validation import check_outcome_pairs, check_positive_vector

RIDGE = 1e-6
MAX_ITER = 100
STEP_TOL = 1e-10
# resamples rejected for having one class are redrawn at most this often
MAX_REDRAWS = 100


def sample_frequency(freqs: Sequence[float] | np.ndarray) -> float:
    """Geometric mean of per-concept frequencies, computed in log space."""
    arr = check_positive_vector(freqs, "freqs")
    return float(np.exp(np.mean(np.log(arr))))


def iqr_filter(
    values: Sequence[float] | np.ndarray,
    multiplier: float = 1.5,
    space: str = "log",
) -> np.ndarray:
    """Boolean keep-mask fencing values to [Q1 - m*IQR, Q3 + m*IQR].

    Quartiles use linear interpolation of order statistics.  In "log"
    space (the default) the fences are computed on log10 of the values,
    which suits heavy-tailed frequency data.
    """
    arr = check_positive_vector(values, "values")
    if arr.size < 4:
        raise FitError(f"need at least 4 values for IQR fencing, got {arr.size}")
    if multiplier <= 0:
        raise ValueError("multiplier must be positive")
    if space == "log":
        t = np.log10(arr)
    elif space == "linear":
        t = arr
    else:
        raise ValueError(f"unknown IQR space {space!r}")
    q1, q3 = np.percentile(t, [25.0, 75.0])
    iqr = q3 - q1
    lo = q1 - multiplier * iqr
    hi = q3 + multiplier * iqr
    return (t >= lo) & (t <= hi)


def _nll(eta: np.ndarray, y: np.ndarray) -> np.ndarray:
    # negative Bernoulli log-likelihood per batch row, stable at large |eta|
    return np.sum(np.logaddexp(0.0, eta) - y * eta, axis=-1)


def _irls_batch(
    x: np.ndarray,
    y: np.ndarray,
    ridge: float = RIDGE,
    max_iter: int = MAX_ITER,
    tol: float = STEP_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Fit sigma(b0 + b1*x) per batch row; returns (betas (B,2), converged (B,))."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    nb = x.shape[0]
    beta = np.zeros((nb, 2))

    def objective(b: np.ndarray) -> np.ndarray:
        eta = b[:, 0:1] + b[:, 1:2] * x
        return _nll(eta, y) + 0.5 * ridge * np.sum(b * b, axis=1)

    obj = objective(beta)
    converged = np.zeros(nb, dtype=bool)
    for _ in range(max_iter):
        eta = beta[:, 0:1] + beta[:, 1:2] * x
        p = expit(eta)
        w = np.maximum(p * (1.0 - p), 1e-12)
        z = eta + (y - p) / w
        s0 = np.sum(w, axis=1) + ridge
        s1 = np.sum(w * x, axis=1)
        s2 = np.sum(w * x * x, axis=1) + ridge
        t0 = np.sum(w * z, axis=1)
        t1 = np.sum(w * x * z, axis=1)
        det = s0 * s2 - s1 * s1
        newton = np.stack([(s2 * t0 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det], axis=1)

        # backtrack rows whose full Newton step raises the objective
        step = np.ones(nb)
        trial = newton
        trial_obj = objective(trial)
        for _ in range(30):
            worse = trial_obj > obj + 1e-12
            if not np.any(worse):
                break
            step[worse] *= 0.5
            trial = beta + step[:, None] * (newton - beta)
            trial_obj = objective(trial)

        # converged rows are frozen so results do not depend on batching
        active = ~converged
        delta = np.max(np.abs(trial - beta), axis=1)
        beta = np.where(active[:, None], trial, beta)
        obj = np.where(active, trial_obj, obj)
        converged |= active & (delta < tol)
        if np.all(converged):
            break
    return beta, converged


class FrequencyLogisticRegression(BaseEstimator):
    """Logistic regression of a binary outcome on log10 of a frequency.

    Scikit-learn estimator conventions: constructor stores
    hyperparameters untouched, fit sets trailing-underscore attributes
    and returns self.
    """

    def __init__(self, ridge: float = RIDGE, max_iter: int = MAX_ITER, tol: float = STEP_TOL):
        self.ridge = ridge
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, f_avg, y):
        f = check_positive_vector(f_avg, "f_avg")
        yy = np.asarray(y, dtype=np.float64).ravel()
        if yy.shape != f.shape:
            raise ValueError("f_avg and y must have the same length")
        if not np.all(np.isin(yy, (0.0, 1.0))):
            raise ValueError("y must be binary")
        if yy.size < 2:
            raise FitError(f"need at least 2 samples, got {yy.size}")
        if yy.min() == yy.max():
            raise FitError("degenerate labels: only one class present")
        x = np.log10(f)
        betas, conv = _irls_batch(x[None, :], yy[None, :], self.ridge, self.max_iter, self.tol)
        self.beta0_ = float(betas[0, 0])
        self.beta1_ = float(betas[0, 1])
        self.converged_ = bool(conv[0])
        self.log_likelihood_ = -float(_nll(self.beta0_ + self.beta1_ * x, yy))
        return self

    def decision_function(self, f_avg) -> np.ndarray:
        f = check_positive_vector(f_avg, "f_avg")
        return self.beta0_ + self.beta1_ * np.log10(f)

    def predict_proba(self, f_avg) -> np.ndarray:
        p1 = expit(self.decision_function(f_avg))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, f_avg) -> np.ndarray:
        return (self.decision_function(f_avg) >= 0.0).astype(np.int64)


@dataclass
class LogisticFit:
    beta0: float
    beta1: float
    p_value: float
    ci: dict[str, tuple[float, float]]
    ci_level: float
    n_used: int
    n_dropped_iqr: int
    B: int
    seed: int
    converged: bool
    bootstrap_betas: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "beta0": self.beta0,
            "beta1": self.beta1,
            "p_value": self.p_value,
            "ci": {k: [v[0], v[1]] for k, v in self.ci.items()},
            "ci_level": self.ci_level,
            "n_used": self.n_used,
            "n_dropped_iqr": self.n_dropped_iqr,
            "B": self.B,
            "seed": self.seed,
            "converged": self.converged,
        }


def predict(fit: LogisticFit, f_avg) -> float | np.ndarray:
    """Success probability sigma(beta0 + beta1*log10(f_avg))."""
    f = check_positive_vector(f_avg, "f_avg")
    p = expit(fit.beta0 + fit.beta1 * np.log10(f))
    return float(p[0]) if np.isscalar(f_avg) or np.ndim(f_avg) == 0 else p


def _bootstrap_resample(rng: np.random.Generator, y: np.ndarray) -> np.ndarray:
    # redraw until both classes appear; a one-class resample has no slope
    n = y.size
    for _ in range(MAX_REDRAWS):
        idx = rng.integers(0, n, size=n)
        picked = y[idx]
        if picked.min() != picked.max():
            return idx
    raise FitError("bootstrap resampling produced single-class replicates repeatedly")


def fit_logistic(
    outcomes: Iterable[tuple[float, float]],
    B: int = 1000,
    seed: int = 0,
    ci_level: float = 0.95,
    apply_iqr: bool = True,
    iqr_multiplier: float = 1.5,
    iqr_space: str = "log",
) -> LogisticFit:
    """Fit P(y=1) = sigma(beta0 + beta1*log10(f_avg)) with bootstrap CIs.

    outcomes: (y, f_avg) pairs with y in {0,1} and f_avg > 0.  IQR
    fencing on f_avg runs first (skipped below 4 samples, where the
    quartiles are meaningless).  The p-value is a likelihood-ratio test
    of the slope against the intercept-only model.
    """
    y_all, f_all = check_outcome_pairs(outcomes)
    if B < 1:
        raise ValueError("B must be at least 1")

    if apply_iqr and f_all.size >= 4:
        keep = iqr_filter(f_all, multiplier=iqr_multiplier, space=iqr_space)
    else:
        keep = np.ones(f_all.size, dtype=bool)
    y = y_all[keep]
    f = f_all[keep]
    n_dropped = int(f_all.size - f.size)

    if y.size < 2:
        raise FitError(f"need at least 2 samples after IQR fencing, got {y.size}")
    if y.min() == y.max():
        raise FitError("degenerate labels: only one class present")

    x = np.log10(f)
    n = y.size

    betas, conv = _irls_batch(x[None, :], y[None, :])
    beta0, beta1 = float(betas[0, 0]), float(betas[0, 1])

    # likelihood-ratio test: slope model vs intercept-only (x forced to 0)
    ll_full = -float(_nll(beta0 + beta1 * x, y))
    null_betas, _ = _irls_batch(np.zeros((1, n)), y[None, :])
    ll_null = -float(_nll(null_betas[0, 0] + np.zeros(n), y))
    lr_stat = max(2.0 * (ll_full - ll_null), 0.0)
    p_value = float(chi2.sf(lr_stat, df=1))

    # resamples are deterministic in (seed, i); fitting runs in batches
    # sized to cap temporary arrays (rows freeze at convergence, so the
    # batching leaves per-replicate results untouched)
    idx = np.empty((B, n), dtype=np.int64)
    for i in range(B):
        idx[i] = _bootstrap_resample(np.random.default_rng([seed, i]), y)
    block = max(1, int(2_000_000 // n))
    chunks = []
    for start in range(0, B, block):
        sel = idx[start : start + block]
        betas_chunk, _ = _irls_batch(x[sel], y[sel])
        chunks.append(betas_chunk)
    boot_betas = np.concatenate(chunks, axis=0)

    alpha = (1.0 - ci_level) / 2.0
    qs = [100.0 * alpha, 100.0 * (1.0 - alpha)]
    lo0, hi0 = np.percentile(boot_betas[:, 0], qs)
    lo1, hi1 = np.percentile(boot_betas[:, 1], qs)

    return LogisticFit(
        beta0=beta0,
        beta1=beta1,
        p_value=p_value,
        ci={"beta0": (float(lo0), float(hi0)), "beta1": (float(lo1), float(hi1))},
        ci_level=ci_level,
        n_used=n,
        n_dropped_iqr=n_dropped,
        B=B,
        seed=seed,
        converged=bool(conv[0]),
        bootstrap_betas=boot_betas,
    )


def binned_recall(
    outcomes: Iterable[tuple[float, float]], n_bins: int
) -> list[tuple[float, float, int]]:
    """Mean outcome per log10(f_avg) bin: (bin_center, mean_recall, count).

    Bins are equal-width on the log10 scale across the observed range;
    empty bins are emitted with count 0 and NaN mean.  Centers are on
    the log10 scale.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    y, f = check_outcome_pairs(outcomes)
    t = np.log10(f)
    lo, hi = float(t.min()), float(t.max())
    if lo == hi:
        # degenerate range: pad so every value lands in one interior bin
        lo, hi = lo - 0.5, hi + 0.5
    width = (hi - lo) / n_bins
    which = np.minimum(((t - lo) / width).astype(np.int64), n_bins - 1)
    out = []
    for b in range(n_bins):
        center = lo + (b + 0.5) * width
        mask = which == b
        count = int(mask.sum())
        mean = float(y[mask].mean()) if count else math.nan
        out.append((center, mean, count))
    return out


def write_fit(fit: LogisticFit, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(fit.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_bootstrap(fit: LogisticFit, path: str | Path) -> None:
    """CSV of bootstrap replicates, for confidence bands downstream."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("replicate,beta0,beta1\n")
        for i, (b0, b1) in enumerate(fit.bootstrap_betas):
            fh.write(f"{i},{float(b0)!r},{float(b1)!r}\n")


def read_bootstrap(path: str | Path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "replicate,beta0,beta1":
            raise FitError(f"{path}: unexpected bootstrap CSV header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rows.append((float(parts[1]), float(parts[2])))
    return np.asarray(rows, dtype=np.float64)
