"""Nearest-neighbour density estimation with Inverse-Gamma inference.

Around an interior point ``t`` where the density ``f(t)`` is positive the
scaled sample is asymptotically a unit-rate-times-``f(t)`` Poisson process
on both sides, so the gaps to the ``k`` lower and ``k`` upper neighbours
are ``2k`` independent exponentials.  The estimators and the gap test
below are functions of those gaps.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_probability, check_sample_1d
from .errors import DegenerateSpan, DomainError, InsufficientNeighbours, InvalidRatios
from .rvdist import prepare_sample
from .special import gamma_cdf, gamma_quantile, gamma_sf


@dataclass(frozen=True)
class NeighbourSpan:
    t: float
    k: int
    lower: np.ndarray  # k nearest strictly below t, nearest first
    upper: np.ndarray  # k nearest at or above t, nearest first
    n: int

    @property
    def width(self):
        return float(self.upper[-1] - self.lower[-1])


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    k: int
    n: int
    method: str
    t: float = math.nan
    ci: tuple[float, float, float] | None = None  # (level, lower, upper)

    def to_record(self):
        rec = asdict(self)
        rec["ci"] = None if self.ci is None else {"level": self.ci[0], "lower": self.ci[1], "upper": self.ci[2]}
        return rec

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)


@dataclass(frozen=True)
class InverseGammaLaw:
    """Law of ``scale / G`` with ``G ~ Gamma(shape, 1)``."""

    shape: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError(f"inverse gamma needs positive shape and scale, got {self.shape}, {self.scale}")

    @property
    def mode(self):
        return self.scale / (self.shape + 1.0)

    @property
    def mean(self):
        return self.scale / (self.shape - 1.0) if self.shape > 1 else math.inf

    @property
    def variance(self):
        a = self.shape
        return self.scale**2 / ((a - 1.0) ** 2 * (a - 2.0)) if a > 2 else math.inf

    @property
    def second_moment(self):
        a = self.shape
        return self.scale**2 / ((a - 1.0) * (a - 2.0)) if a > 2 else math.inf


def invgamma_cdf(law: InverseGammaLaw, x):
    """``P(scale / G <= x) = Q(shape, scale / x)``; 0 for ``x <= 0``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        arg = np.where(x > 0, law.scale / np.where(x > 0, x, 1.0), np.inf)
    out = np.where(x > 0, gamma_sf(law.shape, arg), 0.0)
    return float(out) if out.ndim == 0 else out


def invgamma_quantile(law: InverseGammaLaw, p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("inverse gamma quantile needs p in (0, 1)")
    out = law.scale / np.asarray(gamma_quantile(law.shape, 1.0 - p), dtype=float)
    return float(out) if out.ndim == 0 else out


def ratio_law(k: int) -> InverseGammaLaw:
    """Asymptotic law of ``f_hat_k / f``: ``(2k - 1) * InvGamma(2k, 1)`` (``1 / Gamma(2, 1)`` for k = 1)."""
    k = check_count(k, "k", minimum=1)
    return InverseGammaLaw(2.0 * k, 2.0 * k - 1.0 if k > 1 else 1.0)


def neighbour_span(sample, t: float, k: int) -> NeighbourSpan:
    """The ``k`` nearest points strictly below ``t`` and the ``k`` nearest at or above it.

    ``sample`` must be sorted and strictly increasing (see
    :func:`pll.rvdist.prepare_sample`).
    """
    k = check_count(k, "k", minimum=1)
    y = np.asarray(sample, dtype=float)
    i = int(np.searchsorted(y, t, side="left"))
    if i < k or y.size - i < k:
        raise InsufficientNeighbours(
            f"need {k} points on each side of t={t}; have {i} below and {y.size - i} at or above", t=t
        )
    return NeighbourSpan(float(t), k, y[i - k : i][::-1].copy(), y[i : i + k].copy(), int(y.size))


def _span_n(span, n):
    return span.n if n is None else check_count(n, "n", minimum=1)


def naive_estimate(span: NeighbourSpan, n: int | None = None) -> DensityEstimate:
    if span.k != 1:
        raise DomainError(f"the naive estimator uses k = 1, got k = {span.k}")
    n = _span_n(span, n)
    width = (span.upper[0] - span.t) + (span.t - span.lower[0])
    if not width > 0:
        raise DegenerateSpan(f"zero neighbour span at t={span.t}")
    return DensityEstimate((1.0 / n) / width, 1, n, "naive", span.t)


def umvu_estimate(span: NeighbourSpan, n: int | None = None, level: float | None = None) -> DensityEstimate:
    """``((2k - 1) / n) / ([t]^{+k} - [t]^{-k})`` with an optional pivot-based interval.

    The interval inverts ``f_hat / f ~ (2k - 1) / G``, ``G ~ Gamma(2k, 1)``.
    """
    k = span.k
    if k <= 1:
        raise DomainError("the UMVU estimator needs k > 1", key="k")
    n = _span_n(span, n)
    width = span.width
    if not width > 0:
        raise DegenerateSpan(f"zero neighbour span at t={span.t}")
    value = ((2.0 * k - 1.0) / n) / width
    ci = None
    if level is not None:
        level = check_probability(level, "level", open_interval=True)
        g_lo = float(gamma_quantile(2.0 * k, 0.5 * (1.0 - level)))
        g_hi = float(gamma_quantile(2.0 * k, 0.5 * (1.0 + level)))
        ci = (level, value * g_lo / (2.0 * k - 1.0), value * g_hi / (2.0 * k - 1.0))
    return DensityEstimate(value, k, n, "umvu", span.t, ci)


def estimate(sample, t, k, n=None, level=None) -> DensityEstimate:
    span = neighbour_span(sample, t, k)
    if k == 1:
        return naive_estimate(span, n)
    return umvu_estimate(span, n, level)


def estimate_integral(sample, points, g, k, n=None) -> float:
    """``sum_i g(t_i) * f_hat_k(n, t_i)`` over distinct evaluation points."""
    pts = np.asarray(points, dtype=float).reshape(-1)
    if np.unique(pts).size != pts.size:
        raise DomainError("evaluation points must be pairwise distinct")
    total = 0.0
    for t in pts:
        try:
            est = estimate(sample, float(t), k, n)
        except (InsufficientNeighbours, DegenerateSpan) as exc:
            raise type(exc)(f"at t={t}: {exc}", t=float(t)) from exc
        total += float(g(t)) * est.value
    return total


def gap_statistic(sample, k: int) -> float:
    """``prod_{i<k} [0]^{+i} / [0]^{+k}`` from the ``k`` smallest nonnegative values."""
    k = check_count(k, "k", minimum=2)
    y = np.asarray(sample, dtype=float)
    y = y[y >= 0]
    if y.size < k:
        raise InsufficientNeighbours(f"need {k} points at or above 0, have {y.size}")
    up = np.partition(y, k - 1)[:k] if y.size > k else y.copy()
    up = np.sort(up)
    if not up[-1] > 0:
        raise InvalidRatios("k-th upper neighbour of 0 is 0")
    stat = float(np.exp(np.sum(np.log(up[:-1] / up[-1]))))
    if not 0.0 < stat <= 1.0:
        raise InvalidRatios(f"ratio product {stat} is outside (0, 1]")
    return stat


def gap_pvalue(statistic: float, k: int) -> float:
    """``P(U_1 ... U_{k-1} >= T) = P(Gamma(k - 1, 1) <= -log T)``."""
    if not 0.0 < statistic <= 1.0:
        raise InvalidRatios(f"ratio product {statistic} is outside (0, 1]")
    return float(gamma_cdf(k - 1.0, -math.log(statistic)))


def lr_gap_test(sample, k: int) -> tuple[float, float]:
    """Likelihood-ratio test of a locally uniform law at 0 against ``F ~ zeta t^2``.

    Large values of the statistic indicate a gap at the origin.
    Returns ``(statistic, p_value)``.
    """
    stat = gap_statistic(sample, k)
    return stat, gap_pvalue(stat, k)


class KNNDensity(BaseEstimator):
    """Nearest-neighbour density estimator.

    Parameters
    ----------
    k : int
        Neighbours used on each side. ``k = 1`` gives the naive estimator,
        larger ``k`` the asymptotically unbiased minimum-variance one.
    level : float or None
        Confidence level for intervals (``k > 1`` only).

    Attributes
    ----------
    sample_ : ndarray
        Sorted, tie-free training sample.
    n_ : int
    """

    def __init__(self, k=1, level=None):
        self.k = k
        self.level = level

    def fit(self, X, y=None):
        self.sample_ = prepare_sample(check_sample_1d(X))
        self.n_ = self.sample_.size
        return self

    def estimate(self, t) -> DensityEstimate:
        check_is_fitted(self, "sample_")
        return estimate(self.sample_, float(t), self.k, self.n_, self.level if self.k > 1 else None)

    def predict(self, T):
        """Density estimates at each point of ``T``."""
        return np.array([self.estimate(t).value for t in check_sample_1d(T, "T")])

    def confidence_interval(self, T):
        if self.k <= 1 or self.level is None:
            raise DomainError("intervals need k > 1 and a level")
        return np.array([self.estimate(t).ci[1:] for t in check_sample_1d(T, "T")])
