"""Bivariate normal copula: sampling, joint upper tails and joint extremes.

For correlation ``rho`` in ``(0, 1)`` the joint exceedance probability
``P(U1 > 1 - x t1, U2 > 1 - x t2)`` decays like ``x**(2 / (1 + rho))``
times a slowly varying factor, so joint extremes are scaled by
``a_n = n**(-(1 + rho) / 2)`` rather than the marginal ``1 / n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import rng
from ._validation import check_count
from .epp import Box, ScaledProcessD, _from_centered, orthant_index
from .errors import DomainError
from .special import norm_cdf, norm_ppf, norm_sf

_SQRT_2PI = math.sqrt(2.0 * math.pi)
# phi(s) is below 1e-31 relative to its value at h once s > h + 12
_TAIL_SPAN = 12.0


@dataclass(frozen=True)
class NormalCopula:
    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise DomainError(f"rho must lie in (0, 1], got {self.rho}", key="rho")

    @property
    def comonotone(self):
        return self.rho == 1.0

    @property
    def tail_exponent(self):
        return 2.0 / (1.0 + self.rho)


@dataclass(frozen=True)
class TailLawEstimate:
    exponent: float
    w: dict = field(default_factory=dict)
    x_range: tuple[float, float] = (math.nan, math.nan)
    rho: float = math.nan

    def to_json(self):
        rec = {
            "rho": self.rho,
            "exponent": self.exponent,
            "target_exponent": 2.0 / (1.0 + self.rho) if self.rho == self.rho else None,
            "x_range": list(self.x_range),
            "W": [{"t1": t1, "t2": t2, "W": v} for (t1, t2), v in sorted(self.w.items())],
        }
        return json.dumps(rec, sort_keys=True)


def _correlated_normals(cop, seed, n, rep):
    z = rng.stream(seed, rep).standard_normal((int(n), 2))
    z1 = z[:, 0]
    if cop.comonotone:
        return z1, z1.copy()
    return z1, cop.rho * z1 + math.sqrt(1.0 - cop.rho**2) * z[:, 1]


def sample_copula(cop: NormalCopula, seed: int, n: int, rep: int = 0) -> np.ndarray:
    """``n`` pairs with uniform margins and normal copula ``cop``; shape ``(n, 2)``."""
    n = check_count(n, "n")
    z1, z2 = _correlated_normals(cop, seed, n, rep)
    return np.column_stack([norm_cdf(z1), norm_cdf(z2)])


def orthant_probability(h: float, k: float, rho: float) -> float:
    """``P(Z1 > h, Z2 > k)`` for standard bivariate normals with correlation ``rho``.

    One-dimensional quadrature of ``phi(s) * Phibar((k - rho s) / sqrt(1 - rho^2))``
    over ``s > h``, where ``h`` is the larger threshold so the integrand is
    concentrated at the lower limit.
    """
    if h < k:
        h, k = k, h
    if h == -math.inf:
        return 1.0
    if k == -math.inf:
        return float(norm_sf(h))
    if rho >= 1.0:
        return float(norm_sf(max(h, k)))
    if rho == 0.0:
        return float(norm_sf(h) * norm_sf(k))
    s = math.sqrt(1.0 - rho * rho)

    def integrand(z):
        return math.exp(-0.5 * z * z) / _SQRT_2PI * float(norm_sf((k - rho * z) / s))

    # the integrand is bounded by phi(s), so nothing beyond max(h, 0) + 12 matters
    upper = max(h, 0.0) + _TAIL_SPAN
    val, _ = integrate.quad(integrand, h, upper, epsabs=1e-15, epsrel=1e-12, limit=500)
    return float(val)


def joint_tail(cop: NormalCopula, x: float, t1: float, t2: float) -> float:
    """``P(U1 > 1 - x t1, U2 > 1 - x t2)`` under the copula."""
    p1, p2 = x * t1, x * t2
    for p in (p1, p2):
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"x * t must lie in [0, 1], got {p}")
    if p1 == 0.0 or p2 == 0.0:
        return 0.0
    if cop.comonotone:
        return min(p1, p2)
    h = math.inf if p1 == 0 else float(-norm_ppf(p1))
    k = math.inf if p2 == 0 else float(-norm_ppf(p2))
    # thresholds are -Phi^{-1}(p) = Phi^{-1}(1 - p), computed without cancellation
    return orthant_probability(h, k, cop.rho)


def independent_tail(x, t1, t2):
    """Joint tail of independent uniforms; the ``rho -> 0`` reference."""
    return (x * t1) * (x * t2)


def comonotone_tail(x, t1, t2):
    return min(x * t1, x * t2)


def fit_tail_law(cop: NormalCopula, x_grid, t_grid) -> TailLawEstimate:
    """Least-squares tail exponent and the normalized shape ``W`` on ``t_grid``.

    The exponent is the slope of ``log P(U1 > 1 - x, U2 > 1 - x)`` against
    ``log x``.  ``W(t1, t2)`` is ``P(.. x t1, .. x t2) / P(.. x, .. x)`` at the
    smallest ``x`` of the grid; ``t_grid`` holds nonnegative pairs, i.e.
    ``W`` at ``(-t1, -t2)`` on the scaled extremes axis.
    """
    xs = np.unique(np.asarray(x_grid, dtype=float))
    if xs.size < 2:
        raise DomainError("the exponent fit needs at least two distinct x values", key="x_grid")
    if np.any(xs <= 0) or np.any(xs > 1):
        raise DomainError("x grid must lie in (0, 1]", key="x_grid")
    logp = np.log([joint_tail(cop, x, 1.0, 1.0) for x in xs])
    logx = np.log(xs)
    slope = float(np.polyfit(logx, logp, 1)[0])
    x0 = float(xs[0])
    base = joint_tail(cop, x0, 1.0, 1.0)
    w = {}
    for t1, t2 in t_grid:
        t1, t2 = float(t1), float(t2)
        w[(t1, t2)] = 1.0 if (t1, t2) == (1.0, 1.0) else joint_tail(cop, x0, t1, t2) / base
    return TailLawEstimate(slope, w, (x0, float(xs[-1])), cop.rho)


def extremes_scaling(cop: NormalCopula, n: int) -> float:
    return float(n) ** (-(1.0 + cop.rho) / 2.0)


def extremes_process(cop: NormalCopula, seed: int, n: int, rep: int = 0) -> ScaledProcessD:
    """All ``n`` copula pairs centred at ``(1, 1)`` and scaled by ``a_n``.

    ``1 - U`` is computed as ``Phibar(Z)`` directly so points deep in the
    tail keep full precision (and stay strictly negative).
    """
    n = check_count(n, "n", minimum=1)
    z1, z2 = _correlated_normals(cop, seed, n, rep)
    centered = -np.column_stack([norm_sf(z1), norm_sf(z2)])
    a_n = extremes_scaling(cop, n)
    return _from_centered(centered, np.array([1.0, 1.0]), np.full(4, a_n))


def extremes_counts(cop: NormalCopula, seed: int, n: int, boxes, rep: int = 0) -> np.ndarray:
    """Counts of :func:`extremes_process` in ``boxes`` (all in the ``(-, -)`` quadrant).

    Equal to counting in the full process, but only pairs whose first
    coordinate can reach the boxes are pushed through the normal tail.
    """
    n = check_count(n, "n", minimum=1)
    boxes = list(boxes)
    a_n = extremes_scaling(cop, n)
    reach = max(float(-np.min(b.lower)) for b in boxes)
    for b in boxes:
        if np.any(b.upper > 0):
            raise DomainError("extremes boxes must lie in the nonpositive quadrant")
    z = rng.stream(seed, rep).standard_normal((n, 2))
    p_cut = min(reach * a_n * (1.0 + 1e-9), 1.0)
    z_cut = float(-norm_ppf(p_cut)) if p_cut < 1.0 else -math.inf
    keep = z[:, 0] >= z_cut - 1e-9
    z1 = z[keep, 0]
    if cop.comonotone:
        z2 = z1
    else:
        z2 = cop.rho * z1 + math.sqrt(1.0 - cop.rho**2) * z[keep, 1]
    pts = -np.column_stack([norm_sf(z1), norm_sf(z2)]) / a_n
    out = np.empty(len(boxes), dtype=np.int64)
    for i, b in enumerate(boxes):
        out[i] = np.count_nonzero(np.all((pts >= b.lower) & (pts <= b.upper), axis=1))
    return out


def unit_box():
    """``[-1, 0]^2``, the box whose limit mean is ``W(1, 1)`` times the normalization."""
    return Box([-1.0, -1.0], [0.0, 0.0])


__all__ = [
    "NormalCopula",
    "TailLawEstimate",
    "sample_copula",
    "orthant_probability",
    "joint_tail",
    "independent_tail",
    "comonotone_tail",
    "fit_tail_law",
    "extremes_scaling",
    "extremes_process",
    "extremes_counts",
    "orthant_index",
    "unit_box",
]
