"""Univariate model families with known local power-law behaviour.

Each model exposes vectorized ``cdf``, ``sf``, ``pdf`` and ``quantile``
methods and can report its regular-variation indices at any anchor of its
support through :meth:`regvar`.  Sampling is inverse-CDF applied to the
Philox stream of :mod:`pll.rng`.

Large Monte Carlo runs rarely need the whole sample: everything the
Poisson-limit statistics look at sits in a window of width ``O(1/n)``
around an anchor.  :func:`sample_window` returns exactly the members of
``sample(model, seed, n)`` that land in ``[lo, hi]`` (plus the counts on
either side) while only inverting the uniforms that can land there.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import rng
from .errors import DomainError, TailExhausted

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegVarSpec:
    """Local power-law description of a CDF at ``anchor``.

    ``F(anchor + x) - F(anchor) ~ omega_right * x**alpha_right`` as ``x -> 0+``
    and ``F(anchor) - F(anchor - x) ~ omega_left * x**beta_left``.  The
    slowly varying factor is taken to be the constant ``omega``.
    """

    anchor: float
    alpha_right: float
    beta_left: float | None = None
    omega_right: float = 1.0
    omega_left: float | None = None

    def __post_init__(self):
        if not self.alpha_right > 0:
            raise DomainError(f"alpha_right must be positive, got {self.alpha_right}")
        if not self.omega_right > 0:
            raise DomainError(f"omega_right must be positive, got {self.omega_right}")
        if self.beta_left is not None:
            if not self.beta_left > 0:
                raise DomainError(f"beta_left must be positive, got {self.beta_left}")
            if self.omega_left is None:
                object.__setattr__(self, "omega_left", 1.0)
            if not self.omega_left > 0:
                raise DomainError(f"omega_left must be positive, got {self.omega_left}")


def _arr(x):
    return np.asarray(x, dtype=float)


def _ret(template, out):
    return float(out) if np.ndim(template) == 0 else out


class UnivariateModel:
    """Base class: subclasses provide ``_cdf``, ``_pdf``, ``_quantile`` and ``support``."""

    family = "abstract"
    support: tuple[float, float] = (0.0, 1.0)

    def cdf(self, x):
        x = _arr(x)
        lo, hi = self.support
        out = np.clip(self._cdf(np.clip(x, lo, hi)), 0.0, 1.0)
        out = np.where(x < lo, 0.0, np.where(x >= hi, 1.0, out))
        return _ret(x, out)

    def sf(self, x):
        return _ret(x, 1.0 - _arr(self.cdf(x)))

    def pdf(self, x):
        x = _arr(x)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(inside, self._pdf(np.clip(x, lo, hi)), 0.0)
        return _ret(x, out)

    def quantile(self, p):
        """Generalized inverse ``inf{x : F(x) >= p}`` (left end of flat stretches)."""
        p = _arr(p)
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise DomainError("quantile probabilities must lie in [0, 1]")
        return _ret(p, self._quantile(p))

    def regvar(self, u) -> RegVarSpec:
        raise NotImplementedError

    @property
    def annotations(self) -> tuple[RegVarSpec, ...]:
        return ()

    def params(self) -> dict:
        raise NotImplementedError

    def _check_in_support(self, u):
        lo, hi = self.support
        if not lo <= u <= hi:
            raise DomainError(f"anchor {u} lies outside the support [{lo}, {hi}]")


@dataclass(frozen=True)
class PowerLaw(UnivariateModel):
    """``F(x) = x**alpha`` on ``[0, 1]``; regularly varying at 0 with index ``alpha``."""

    alpha: float
    family = "powerlaw"

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive and finite, got {self.alpha}")

    def _cdf(self, x):
        return x**self.alpha

    def _pdf(self, x):
        return self.alpha * x ** (self.alpha - 1.0)

    def _quantile(self, p):
        return p ** (1.0 / self.alpha)

    def regvar(self, u):
        self._check_in_support(u)
        a = self.alpha
        if u == 0:
            return RegVarSpec(0.0, a, None, 1.0)
        if u == 1:
            # only the left side exists; record it with the right index mirrored
            return RegVarSpec(1.0, 1.0, 1.0, a, a)
        dens = a * u ** (a - 1.0)
        return RegVarSpec(u, 1.0, 1.0, dens, dens)

    @property
    def annotations(self):
        return (self.regvar(0.0),)

    def params(self):
        return {"family": self.family, "alpha": self.alpha}


@dataclass(frozen=True)
class Uniform(UnivariateModel):
    a: float = 0.0
    b: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"uniform needs a < b, got a={self.a}, b={self.b}")

    @property
    def support(self):
        return (self.a, self.b)

    def _cdf(self, x):
        return (x - self.a) / (self.b - self.a)

    def _pdf(self, x):
        return np.full_like(x, 1.0 / (self.b - self.a))

    def _quantile(self, p):
        return self.a + p * (self.b - self.a)

    def regvar(self, u):
        self._check_in_support(u)
        dens = 1.0 / (self.b - self.a)
        if u == self.a:
            return RegVarSpec(u, 1.0, None, dens)
        return RegVarSpec(u, 1.0, 1.0, dens, dens)

    @property
    def annotations(self):
        return (self.regvar(self.a), self.regvar(0.5 * (self.a + self.b)))

    def params(self):
        return {"family": self.family, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class GapModel(UnivariateModel):
    """Uniform density on ``[0, g1] U [g2, 1]``, renormalized.

    ``g1 = 0`` puts the gap right at the origin, which is the alternative
    the gap test at 0 has power against.
    """

    g1: float
    g2: float
    family = "gap"

    def __post_init__(self):
        if not 0.0 <= self.g1 < self.g2 <= 1.0 or self.g2 - self.g1 >= 1.0:
            raise DomainError(f"gap needs 0 <= g1 < g2 <= 1 and a proper gap, got {self.g1}, {self.g2}")

    @property
    def _dens(self):
        return 1.0 / (1.0 - (self.g2 - self.g1))

    def _cdf(self, x):
        c = self._dens
        return np.where(x <= self.g1, c * x, np.where(x <= self.g2, c * self.g1, c * (x - self.g2 + self.g1)))

    def _pdf(self, x):
        inside_gap = (x > self.g1) & (x < self.g2)
        return np.where(inside_gap, 0.0, self._dens)

    def _quantile(self, p):
        c = self._dens
        left_mass = c * self.g1
        return np.where(p <= left_mass, p / c, self.g2 + (p - left_mass) / c)

    def regvar(self, u):
        self._check_in_support(u)
        c = self._dens
        right = u < 1.0 and not (self.g1 <= u < self.g2)
        left = u > 0.0 and not (self.g1 < u <= self.g2)
        if not right:
            raise DomainError(f"no mass immediately to the right of {u}")
        return RegVarSpec(u, 1.0, 1.0 if left else None, c, c if left else None)

    @property
    def annotations(self):
        return (self.regvar(0.0 if self.g1 > 0 else self.g2),)

    def params(self):
        return {"family": self.family, "g1": self.g1, "g2": self.g2}


@dataclass(frozen=True)
class PiecewisePolynomial(UnivariateModel):
    """Piecewise law with prescribed local exponents at every breakpoint.

    Segment ``j`` covers ``[x_j, x_{j+1}]`` and carries probability
    ``masses[j]``, spread with shape ``G(s) = s**p / (s**p + (1 - s)**r)``
    in the local coordinate ``s``.  Hence the CDF rises like ``h**p`` just
    right of ``x_j`` (``p = start_exponents[j]``) and like ``h**r`` just
    left of ``x_{j+1}`` (``r = end_exponents[j]``).  ``G`` has no closed
    inverse, so quantiles bisect on the log-odds of ``s`` until the
    bracket is below double resolution (far tighter than 1e-12 absolute).
    """

    breakpoints: tuple[float, ...]
    masses: tuple[float, ...]
    start_exponents: tuple[float, ...]
    end_exponents: tuple[float, ...]
    family = "piecewise"
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("breakpoints", "masses", "start_exponents", "end_exponents"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        x = np.array(self.breakpoints)
        m = len(x) - 1
        if m < 1 or np.any(np.diff(x) <= 0):
            raise DomainError("breakpoints must be strictly increasing with at least two entries")
        if not (len(self.masses) == len(self.start_exponents) == len(self.end_exponents) == m):
            raise DomainError(f"need {m} masses and exponents for {m + 1} breakpoints")
        w = np.array(self.masses)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("masses must be nonnegative and sum to 1")
        if min(self.start_exponents + self.end_exponents) <= 0:
            raise DomainError("exponents must be positive")
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(w)]))

    @property
    def support(self):
        return (self.breakpoints[0], self.breakpoints[-1])

    @staticmethod
    def _shape(s, p, r):
        sp = s**p
        return sp / (sp + (1.0 - s) ** r)

    def _segment(self, x):
        xs = np.array(self.breakpoints)
        return np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)

    def _local(self, x):
        j = self._segment(x)
        xs = np.array(self.breakpoints)
        length = xs[j + 1] - xs[j]
        s = np.clip((x - xs[j]) / length, 0.0, 1.0)
        return j, s, length

    def _cdf(self, x):
        j, s, _ = self._local(x)
        p = np.array(self.start_exponents)[j]
        r = np.array(self.end_exponents)[j]
        return self._cum[j] + np.array(self.masses)[j] * self._shape(s, p, r)

    def _pdf(self, x):
        j, s, length = self._local(x)
        p = np.array(self.start_exponents)[j]
        r = np.array(self.end_exponents)[j]
        sp, sr = s**p, (1.0 - s) ** r
        num = p * s ** (p - 1.0) * sr + r * sp * (1.0 - s) ** (r - 1.0)
        return np.array(self.masses)[j] * num / (sp + sr) ** 2 / length

    def _quantile(self, p):
        w = np.array(self.masses)
        xs = np.array(self.breakpoints)
        # first segment with positive mass whose cumulative upper end reaches p
        upper = self._cum[1:]
        reach = (upper[None, :] >= p.reshape(-1, 1) - 1e-300) & (w[None, :] > 0)
        j = np.argmax(reach, axis=1).reshape(p.shape)
        target = np.clip((p - self._cum[j]) / np.where(w[j] > 0, w[j], 1.0), 0.0, 1.0)
        pe = np.array(self.start_exponents)[j]
        re = np.array(self.end_exponents)[j]
        length = xs[j + 1] - xs[j]
        # G(s) = target  <=>  p log s - r log(1 - s) = logit(target); bisect on
        # z = logit(s), which keeps full relative accuracy near both ends
        with np.errstate(divide="ignore"):
            goal = np.log(target) - np.log1p(-target)
        lo = np.full_like(target, -_LOGIT_SPAN)
        hi = np.full_like(target, _LOGIT_SPAN)
        for _ in range(_LOGIT_ITERS):
            mid = 0.5 * (lo + hi)
            h = -pe * np.logaddexp(0.0, -mid) + re * np.logaddexp(0.0, mid)
            below = h < goal
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        s = np.where(target <= 0.0, 0.0, np.where(target >= 1.0, 1.0, expit(0.5 * (lo + hi))))
        return xs[j] + s * length

    def regvar(self, u):
        self._check_in_support(u)
        xs = self.breakpoints
        if u not in xs:
            return RegVarSpec(u, 1.0, 1.0, float(self.pdf(u)), float(self.pdf(u)))
        i = xs.index(u)
        right = left = None
        if i < len(xs) - 1 and self.masses[i] > 0:
            length = xs[i + 1] - xs[i]
            p = self.start_exponents[i]
            right = (p, self.masses[i] / length**p)
        if i > 0 and self.masses[i - 1] > 0:
            length = xs[i] - xs[i - 1]
            r = self.end_exponents[i - 1]
            left = (r, self.masses[i - 1] / length**r)
        if right is None:
            raise DomainError(f"no mass immediately to the right of breakpoint {u}")
        return RegVarSpec(
            u, right[0], left[0] if left else None, right[1], left[1] if left else None
        )

    @property
    def annotations(self):
        specs = []
        for u in self.breakpoints[:-1]:
            try:
                specs.append(self.regvar(u))
            except DomainError:
                pass
        return tuple(specs)

    def params(self):
        return {
            "family": self.family,
            "breakpoints": list(self.breakpoints),
            "masses": list(self.masses),
            "start_exponents": list(self.start_exponents),
            "end_exponents": list(self.end_exponents),
        }


_LOGIT_SPAN = 800.0
# 1600 / 2**90 is far below the spacing of doubles anywhere on [-800, 800]
_LOGIT_ITERS = 90

_FAMILIES = {
    "powerlaw": (PowerLaw, ("alpha",)),
    "uniform": (Uniform, ("a", "b")),
    "gap": (GapModel, ("g1", "g2")),
    "piecewise": (PiecewisePolynomial, ("breakpoints", "masses", "start_exponents", "end_exponents")),
}


def model_from_params(params) -> UnivariateModel:
    """Build a model from a ``{"family": ..., <parameters>}`` mapping."""
    params = dict(params)
    family = params.pop("family", None)
    if family not in _FAMILIES:
        raise DomainError(f"unknown model family {family!r}; choose from {sorted(_FAMILIES)}", key="model")
    cls, names = _FAMILIES[family]
    unknown = set(params) - set(names)
    if unknown:
        raise DomainError(f"unknown parameter(s) {sorted(unknown)} for family {family!r}", key=sorted(unknown)[0])
    return cls(**params)


def cdf(model: UnivariateModel, x):
    return model.cdf(x)


def quantile(model: UnivariateModel, p):
    return model.quantile(p)


def sample(model: UnivariateModel, seed: int, n: int, rep: int = 0) -> np.ndarray:
    """Draw ``n`` i.i.d. values by inverse CDF of the ``(seed, rep)`` uniform stream."""
    if n < 0:
        raise DomainError(f"sample size must be nonnegative, got {n}")
    return np.asarray(model.quantile(rng.uniforms(seed, n, rep)), dtype=float).reshape(-1)


def scaling_constants(model: UnivariateModel, u: float, n: int):
    """Return ``(a_n, b_n)`` with ``F(u + a_n) - F(u) = 1/n = F(u) - F(u - b_n)``.

    ``b_n`` is ``None`` when less than ``1/n`` of the mass lies left of ``u``.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    fu = float(model.cdf(u))
    step = 1.0 / n
    if fu + step > 1.0 + 1e-15:
        raise TailExhausted(f"F({u}) + 1/{n} exceeds 1; no right scaling exists", u=u, n=n)
    a_n = float(model.quantile(min(fu + step, 1.0))) - u
    b_n = None
    if fu >= step:
        b_n = u - float(model.quantile(fu - step))
    if not a_n > 0 or (b_n is not None and not b_n > 0):
        raise DomainError(f"F is not strictly increasing near {u}; scalings a={a_n}, b={b_n}")
    return a_n, b_n


@dataclass(frozen=True)
class WindowSample:
    """The members of an i.i.d. sample of size ``n`` lying in ``[lo, hi]``.

    ``values`` is sorted; ``n_below`` and ``n_above`` count the sample
    members strictly outside the window.  A full sample is the special
    case ``lo = -inf, hi = +inf``.
    """

    values: np.ndarray
    lo: float
    hi: float
    n: int
    n_below: int = 0
    n_above: int = 0

    def __post_init__(self):
        if self.n_below + self.n_above + len(self.values) != self.n:
            raise DomainError("window counts do not add up to n")

    @property
    def is_full(self):
        return self.n_below == 0 and self.n_above == 0 and self.lo == -math.inf and self.hi == math.inf

    def covers(self, lo, hi):
        return self.lo <= lo and hi <= self.hi


def as_window(sample, lo=-math.inf, hi=math.inf) -> WindowSample:
    """Wrap a sample (array or :class:`WindowSample`) as a window on ``[lo, hi]``."""
    if isinstance(sample, WindowSample):
        if not sample.covers(lo, hi):
            raise DomainError(f"window [{sample.lo}, {sample.hi}] does not cover [{lo}, {hi}]")
        return sample
    y = np.sort(np.asarray(sample, dtype=float).reshape(-1))
    i = np.searchsorted(y, lo, side="left")
    j = np.searchsorted(y, hi, side="right")
    return WindowSample(y[i:j], float(lo), float(hi), y.size, int(i), int(y.size - j))


def sample_window(model: UnivariateModel, seed: int, n: int, lo: float, hi: float, rep: int = 0) -> WindowSample:
    """Members of ``sample(model, seed, n, rep)`` within ``[lo, hi]``.

    Only the uniforms that can map into the window are inverted, so the
    cost is one pass of uniform generation plus a comparison.
    """
    if n < 0:
        raise DomainError(f"sample size must be nonnegative, got {n}")
    return _window_from_uniforms(model, rng.uniforms(seed, n, rep), lo, hi)


def sample_windows(model: UnivariateModel, seed: int, n: int, intervals, rep: int = 0) -> list[WindowSample]:
    """Several windows of the same sample, from a single pass over the uniforms."""
    if n < 0:
        raise DomainError(f"sample size must be nonnegative, got {n}")
    u = rng.uniforms(seed, n, rep)
    return [_window_from_uniforms(model, u, lo, hi) for lo, hi in intervals]


def _window_from_uniforms(model, u, lo, hi):
    n = u.size
    p_lo = float(model.cdf(lo))
    p_hi = float(model.cdf(hi))
    # widen the uniform band slightly; the exact cut is applied on values
    band_lo = p_lo * (1.0 - 1e-9) - 1e-300
    band_hi = p_hi * (1.0 + 1e-9) + 1e-300
    cand = u[(u >= band_lo) & (u <= band_hi)]
    vals = np.sort(np.asarray(model.quantile(cand), dtype=float).reshape(-1))
    n_low_band = int(np.count_nonzero(u < band_lo))
    i = int(np.searchsorted(vals, lo, side="left"))
    j = int(np.searchsorted(vals, hi, side="right"))
    return WindowSample(vals[i:j], float(lo), float(hi), int(n), n_low_band + i, int(n) - n_low_band - j)


def sample_around(model, seed, n, center, k_below, k_above, rep=0) -> WindowSample:
    """Smallest symmetric-in-probability window holding ``k_below`` points
    below ``center`` and ``k_above`` at or above it.

    The window starts a few standard deviations wider than needed and
    doubles until the requirement is met or the whole support is used.
    Because every attempt reads the same uniform stream, the result is
    deterministic and agrees with the full sample.
    """
    fc = float(model.cdf(center))
    k = max(k_below, k_above)
    width = (k + 6.0 * math.sqrt(k) + 10.0) / max(n, 1)
    lo_s, hi_s = model.support
    while True:
        lo = float(model.quantile(max(fc - width, 0.0))) if fc - width > 0 else lo_s
        hi = float(model.quantile(min(fc + width, 1.0))) if fc + width < 1 else hi_s
        win = sample_window(model, seed, n, lo, hi, rep)
        below = int(np.searchsorted(win.values, center, side="left"))
        above = len(win.values) - below
        if (below >= k_below and above >= k_above) or (lo <= lo_s and hi >= hi_s):
            return win
        width *= 2.0


def prepare_sample(x) -> np.ndarray:
    """Sort a 1-d sample and break exact ties by nudging to the next float up."""
    y = np.sort(np.asarray(x, dtype=float).reshape(-1))
    if y.size > 1 and np.any(np.diff(y) <= 0):
        ties = 0
        for i in range(1, y.size):
            if y[i] <= y[i - 1]:
                y[i] = np.nextafter(y[i - 1], np.inf)
                ties += 1
        log.warning("broke %d tied sample value(s) by the smallest representable increment", ties)
    return y
