"""Student-t utilities used by the hybrid estimator and the harness.

Self-contained: the t CDF goes through the regularized incomplete beta
function evaluated with a Lentz-style continued fraction, quantiles through
bisection. Accuracy is far below the tolerances that matter here (the
estimators compare p-values against 0.02).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

_EPS = 3e-16
_FPMIN = 1e-300
_MAXIT = 300


@dataclass(frozen=True)
class TestResult:
    """Outcome of a two-sample test."""

    statistic: float
    degrees_of_freedom: float
    p_value: float


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def _betai(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """CDF of Student's t distribution with `df` degrees of freedom."""
    if df <= 0:
        raise ValueError(f"t_cdf: df must be positive, got {df}")
    if math.isnan(t):
        raise ValueError("t_cdf: t is NaN")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    x = df / (df + t * t)
    p = 0.5 * _betai(0.5 * df, 0.5, x)
    return 1.0 - p if t > 0 else p


def t_quantile(p: float, df: float) -> float:
    """Inverse of `t_cdf` in its first argument, by bisection to 1e-8."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"t_quantile: p must be in (0, 1), got {p}")
    if df <= 0:
        raise ValueError(f"t_quantile: df must be positive, got {df}")
    lo, hi = -1.0, 1.0
    while t_cdf(lo, df) > p:
        lo *= 2.0
    while t_cdf(hi, df) < p:
        hi *= 2.0
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _mean_var(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    var = float(np.var(values, ddof=1)) if values.shape[0] > 1 else 0.0
    return mean, var


def shifted_one_tailed_test(
    a: Sequence[float], b: Sequence[float], d: float
) -> TestResult:
    """Welch test of H0: mean(a) - mean(b) <= d against Ha: difference > d.

    A small p-value means a's mean credibly exceeds b's by more than d.
    With both sample variances zero the statistic degenerates; conventions:
    difference == d gives p 0.5, above gives 0.0, below gives 1.0.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape[0] < 2 or bv.shape[0] < 2:
        raise ValueError("shifted_one_tailed_test: need at least 2 values per sample")
    ma, va = _mean_var(av)
    mb, vb = _mean_var(bv)
    num = ma - mb - d
    sa = va / av.shape[0]
    sb = vb / bv.shape[0]
    se = math.sqrt(sa + sb)
    if se == 0.0:
        df = float(av.shape[0] + bv.shape[0] - 2)
        if num == 0.0:
            return TestResult(0.0, df, 0.5)
        stat = math.inf if num > 0 else -math.inf
        return TestResult(stat, df, 0.0 if num > 0 else 1.0)
    t = num / se
    df = (sa + sb) ** 2 / (sa * sa / (av.shape[0] - 1) + sb * sb / (bv.shape[0] - 1))
    return TestResult(t, df, 1.0 - t_cdf(t, df))


def mean_ci(values: Sequence[float], alpha: float) -> tuple[float, float]:
    """Two-sided (1 - alpha) t confidence interval for the mean: (lower, upper)."""
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    if n < 2:
        raise ValueError("mean_ci: need at least 2 values")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"mean_ci: alpha must be in (0, 1), got {alpha}")
    mean, var = _mean_var(v)
    half = t_quantile(1.0 - alpha / 2.0, n - 1) * math.sqrt(var / n)
    return mean - half, mean + half


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided paired t test; returns the p-value.

    Degenerate case (all differences equal): p is 1.0 when the common
    difference is zero, else 0.0.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ValueError("paired_t_test: samples must have equal length")
    n = av.shape[0]
    if n < 2:
        raise ValueError("paired_t_test: need at least 2 pairs")
    d = av - bv
    mean, var = _mean_var(d)
    if var == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / math.sqrt(var / n)
    return 2.0 * (1.0 - t_cdf(abs(t), n - 1))


def stars(p: float) -> str:
    """Significance marker: '**' below 0.05, '*' below 0.1, else empty."""
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""
