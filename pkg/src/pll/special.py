"""Special functions and goodness-of-fit primitives shared across modules.

The regularized incomplete gamma function is evaluated with the classic
series / continued-fraction pair, switching at ``x = shape + 1`` where
each converges fastest.  It backs the Gamma and Inverse-Gamma laws, the
gap-test p-value and the chi-square tail.
"""

import math

import numpy as np
from scipy import special as sc
from scipy import stats

from .errors import DomainError, UnpooledCells

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _gamma_series(a, x):
    # lower regularized P(a, x), valid (and fast) for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a, x):
    # upper regularized Q(a, x) by modified Lentz, valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def _gamma_pq(a, x):
    if a <= 0:
        raise DomainError(f"gamma shape must be positive, got {a}")
    if x <= 0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
        return p, 1.0 - p
    q = _gamma_cf(a, x)
    return 1.0 - q, q


def _scalar_or_array(fn, a, x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return fn(float(a), float(arr))
    out = np.empty(arr.shape)
    flat = out.reshape(-1)
    for i, xi in enumerate(arr.reshape(-1)):
        flat[i] = fn(float(a), float(xi))
    return out


def gamma_cdf(shape, x):
    """Regularized lower incomplete gamma ``P(shape, x)``: the Gamma(shape, 1) CDF."""
    return _scalar_or_array(lambda a, xi: _gamma_pq(a, xi)[0], shape, x)


def gamma_sf(shape, x):
    """Regularized upper incomplete gamma ``Q(shape, x) = 1 - P(shape, x)``.

    Computed directly (not as ``1 - P``) so small upper tails keep full
    relative precision.
    """
    return _scalar_or_array(lambda a, xi: _gamma_pq(a, xi)[1], shape, x)


def gamma_pdf(shape, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (shape - 1.0) * np.log(x) - x - math.lgamma(shape)
    return np.where(x > 0, np.exp(logpdf), 0.0)


def _gamma_quantile_scalar(a, p):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return math.inf
    # bracket, then safeguarded Newton on P(a, x) - p
    lo, hi = 0.0, max(1.0, a)
    while _gamma_pq(a, hi)[0] < p:
        lo, hi = hi, 2.0 * hi
    x = 0.5 * (lo + hi)
    for _ in range(200):
        pv, qv = _gamma_pq(a, x)
        err = pv - p
        if err > 0:
            hi = x
        else:
            lo = x
        dens = float(gamma_pdf(a, x))
        step_ok = False
        if dens > 0:
            cand = x - err / dens
            if lo < cand < hi:
                x_new = cand
                step_ok = True
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(x_new, 1e-300) or hi - lo <= 1e-15 * hi:
            return x_new
        x = x_new
    return x


def gamma_quantile(shape, p):
    """Inverse of :func:`gamma_cdf` in its second argument."""
    return _scalar_or_array(_gamma_quantile_scalar, shape, p)


def chi2_sf(statistic, df):
    return gamma_sf(df / 2.0, np.asarray(statistic, dtype=float) / 2.0)


def norm_cdf(x):
    return sc.ndtr(x)


def norm_sf(x):
    return sc.ndtr(-np.asarray(x, dtype=float))


def norm_ppf(p):
    return sc.ndtri(p)


def ks_statistic(sample, cdf):
    """Two-sided Kolmogorov-Smirnov distance ``sup |F_n - F|``.

    Parameters
    ----------
    sample : array_like
        Observations; order is irrelevant.
    cdf : callable
        Vectorized CDF of the hypothesized law.
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("KS statistic of an empty sample is undefined")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_pvalue(statistic, n):
    """Exact finite-sample two-sided KS tail probability."""
    return float(stats.kstwo.sf(statistic, int(n)))


def chi_square(observed, expected, ddof=0):
    """Pearson chi-square statistic and upper-tail p-value.

    ``expected`` must already be pooled; the degrees of freedom are
    ``len(observed) - 1 - ddof``.
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.shape != exp.shape or obs.size == 0:
        raise DomainError("observed and expected must be non-empty and aligned")
    if np.any(exp <= 0):
        raise DomainError("expected counts must be positive")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    df = obs.size - 1 - ddof
    if df < 1:
        raise UnpooledCells(f"chi-square needs at least one degree of freedom, got {df}")
    return stat, float(chi2_sf(stat, df))


def pool_tail(observed, expected, min_expected=5.0):
    """Merge cells from the tail inward until every expectation is >= ``min_expected``.

    The last cell is folded into its predecessor repeatedly; then, if the
    first cell is still too small, it is folded forward.  Returns the
    pooled (observed, expected) arrays.
    """
    obs = [float(v) for v in observed]
    exp = [float(v) for v in expected]
    while len(exp) > 1 and exp[-1] < min_expected:
        tail_e, tail_o = exp.pop(), obs.pop()
        exp[-1] += tail_e
        obs[-1] += tail_o
    while len(exp) > 1 and exp[0] < min_expected:
        head_e, head_o = exp.pop(0), obs.pop(0)
        exp[0] += head_e
        obs[0] += head_o
    if len(exp) < 2:
        raise UnpooledCells(
            f"only {len(exp)} cell(s) left after pooling to expectation >= {min_expected}"
        )
    return np.array(obs), np.array(exp)
