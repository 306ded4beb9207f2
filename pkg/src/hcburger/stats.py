"""Two-sample KS (optionally weighted), chi-square with variance inflation, log-log fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import InsufficientHits


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float | None
    n_x: float
    n_y: float


def _weighted_ecdf_at(x: np.ndarray, w: np.ndarray, points: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cw = np.concatenate([[0.0], np.cumsum(w[order])])
    cw /= cw[-1]
    return cw[np.searchsorted(xs, points, side="right")]


def ks_statistic(x, y, x_weights=None, y_weights=None) -> float:
    """sup |F_x - F_y| over the pooled sample, with optional per-point weights."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise InsufficientHits("both samples must be nonempty")
    wx = np.ones_like(x) if x_weights is None else np.asarray(x_weights, dtype=float)
    wy = np.ones_like(y) if y_weights is None else np.asarray(y_weights, dtype=float)
    pooled = np.concatenate([x, y])
    return float(np.max(np.abs(_weighted_ecdf_at(x, wx, pooled) - _weighted_ecdf_at(y, wy, pooled))))


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / np.sum(w * w))


def ks_two_sample(x, y, x_weights=None, y_weights=None) -> KsResult:
    """KS distance; the p-value (scipy's exact/asymptotic law) is reported only without weights.

    With weights, ``n_x``/``n_y`` are the effective sample sizes.
    """
    d = ks_statistic(x, y, x_weights, y_weights)
    nx = len(x) if x_weights is None else effective_sample_size(x_weights)
    ny = len(y) if y_weights is None else effective_sample_size(y_weights)
    pval = None
    if x_weights is None and y_weights is None:
        pval = float(sps.ks_2samp(x, y).pvalue)
    return KsResult(d, pval, nx, ny)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    pvalue: float
    inflation: float = 0.0

    def quantile(self, level: float = 0.999) -> float:
        return float(sps.chi2.ppf(level, self.df))


def chi_square(observed, expected, inflation: float = 0.0, ddof: int = 0) -> ChiSquareResult:
    """Pearson statistic divided by (1 + inflation).

    ``inflation`` is the relative excess variance per bin that a known
    discretization bias adds to the multinomial one; 0 gives the plain test.
    """
    obs = np.asarray(observed, dtype=float).ravel()
    exp = np.asarray(expected, dtype=float).ravel()
    if obs.shape != exp.shape or obs.size < 2:
        raise InsufficientHits("need at least two matching bins")
    if np.any(exp <= 0):
        raise ValueError("expected counts must be positive")
    raw = float(np.sum((obs - exp) ** 2 / exp))
    df = obs.size - 1 - ddof
    stat = raw / (1.0 + inflation)
    return ChiSquareResult(stat, df, float(sps.chi2.sf(stat, df)), inflation)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int


def loglog_slope(x, y) -> SlopeFit:
    """OLS fit of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise InsufficientHits(f"need at least 3 grid points, got {x.size}")
    if np.any(y <= 0) or np.any(x <= 0):
        raise InsufficientHits("all estimates must be positive for a log-log fit")
    fit = sps.linregress(np.log(x), np.log(y))
    return SlopeFit(float(fit.slope), float(fit.stderr), float(fit.intercept), int(x.size))


def binomial_se(p_hat: float, n: int) -> float:
    return float(np.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)) if n > 0 else float("nan")
