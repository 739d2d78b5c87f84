"""Scaled empirical point processes around anchors.

A one-dimensional process maps each observation ``Y`` to
``(Y - x_q) / a_n`` on the right of the anchor and ``(Y - x_q) / b_n`` on
the left.  The ``d``-dimensional version does the same orthant by
orthant, with one scaling per sign pattern.  Counting uses closed boxes
``[0, t]`` interpreted inside a single orthant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_vector, check_count, check_points, check_probability, check_sample_1d
from .errors import DomainError, OutsideWindow
from .rvdist import UnivariateModel, WindowSample, as_window, scaling_constants

MAX_DIM = 8


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box lying inside one orthant."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower)
        hi = as_vector(self.upper)
        if lo.shape != hi.shape:
            raise DomainError("box corners must have the same dimension")
        if np.any(lo > hi):
            raise DomainError(f"box lower {lo} exceeds upper {hi}")
        # each coordinate interval must not straddle 0
        if np.any((lo < 0) & (hi > 0)):
            raise DomainError(f"box [{lo}, {hi}] straddles an orthant boundary")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def corner(cls, t):
        """The set ``[0, t]`` of the orthant containing ``t``."""
        t = as_vector(t)
        return cls(np.minimum(t, 0.0), np.maximum(t, 0.0))

    @property
    def dim(self):
        return self.lower.size


def orthant_index(centered):
    """Sign-pattern index: bit ``j`` set when coordinate ``j`` is negative (0 counts as nonnegative)."""
    centered = np.atleast_2d(centered)
    bits = (centered < 0).astype(np.int64)
    return bits @ (1 << np.arange(centered.shape[1], dtype=np.int64))


@dataclass(frozen=True)
class ScaledProcess1D:
    """Scaled points around ``anchor``.

    ``window`` is ``None`` for a process built from a full sample.  When
    built from a :class:`~pll.rvdist.WindowSample` it holds the scaled
    window ``(lo, hi)`` and only boxes inside it can be counted.
    """

    anchor: float
    a_n: float
    b_n: float | None
    points: np.ndarray
    n: int
    window: tuple[float, float] | None = None


@dataclass(frozen=True)
class ScaledProcessD:
    anchor: np.ndarray
    scalings: np.ndarray
    points: np.ndarray
    orthants: np.ndarray
    n: int

    @property
    def d(self):
        return self.anchor.size

    def unscale(self):
        """Map the points back to the original sample coordinates."""
        return self.points * self.scalings[self.orthants][:, None] + self.anchor


def _scale_1d(y, anchor, a_n, b_n):
    y = np.asarray(y, dtype=float)
    right = y >= anchor
    if b_n is None and not np.all(right):
        raise DomainError(f"sample has values below the anchor {anchor} but no left scaling exists")
    out = np.empty_like(y)
    out[right] = (y[right] - anchor) / a_n
    if b_n is not None:
        out[~right] = (y[~right] - anchor) / b_n
    return out


def _scale_edge(x, anchor, a_n, b_n):
    if x >= anchor:
        return float((x - anchor) / a_n)
    if b_n is None:
        return 0.0
    return float((x - anchor) / b_n)


def build_scaled_1d(sample, model: UnivariateModel, q: float, n: int) -> ScaledProcess1D:
    """Scaled process at the ``q``-quantile of ``model``.

    ``sample`` is the full i.i.d. sample of size ``n`` or a window of it.
    """
    q = check_probability(q, "q")
    n = check_count(n, "n", minimum=1)
    anchor = float(model.quantile(q))
    a_n, b_n = scaling_constants(model, anchor, n)
    if isinstance(sample, WindowSample):
        if sample.n != n:
            raise DomainError(f"window was drawn with n={sample.n}, expected {n}")
        win = sample
    else:
        y = check_sample_1d(sample, "sample")
        if y.size != n:
            raise DomainError(f"sample has {y.size} values, expected n={n}")
        win = as_window(y)
    points = np.sort(_scale_1d(win.values, anchor, a_n, b_n))
    window = None
    if not win.is_full:
        window = (_scale_edge(win.lo, anchor, a_n, b_n), _scale_edge(win.hi, anchor, a_n, b_n))
    return ScaledProcess1D(anchor, a_n, b_n, points, n, window)


def build_scaled_multid(sample, anchors, scalings) -> list[ScaledProcessD]:
    """One orthant-wise scaled process per anchor.

    ``scalings`` may be a scalar, one value per orthant (length ``2**d``),
    or an ``(m, 2**d)`` array giving separate rates for each anchor.
    """
    y = check_points(sample, name="sample")
    d = y.shape[1]
    if d > MAX_DIM:
        raise DomainError(f"dimension {d} exceeds the supported maximum {MAX_DIM}")
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if anchors.shape[1] != d:
        raise DomainError(f"anchors must have {d} columns")
    m = anchors.shape[0]
    s = np.asarray(scalings, dtype=float)
    if s.ndim == 0:
        s = np.full((m, 2**d), float(s))
    elif s.ndim == 1:
        s = np.broadcast_to(s, (m, s.size))
    if s.shape != (m, 2**d):
        raise DomainError(f"scalings must broadcast to shape ({m}, {2**d}), got {np.shape(scalings)}")
    if np.any(s <= 0):
        raise DomainError("all scalings must be positive")
    return [_from_centered(y - anchors[j], anchors[j], s[j]) for j in range(m)]


def _from_centered(centered, anchor, scalings) -> ScaledProcessD:
    centered = np.asarray(centered, dtype=float)
    k = orthant_index(centered) if centered.size else np.zeros(0, dtype=np.int64)
    pts = centered / scalings[k][:, None] if centered.size else centered.reshape(0, anchor.size)
    return ScaledProcessD(
        np.asarray(anchor, dtype=float), np.asarray(scalings, dtype=float).copy(), pts, k, centered.shape[0]
    )


def count_in(process: ScaledProcess1D | ScaledProcessD, box: Box) -> int:
    """Number of scaled points in the closed ``box``."""
    if isinstance(process, ScaledProcess1D):
        if box.dim != 1:
            raise DomainError("a one-dimensional process needs a one-dimensional box")
        lo, hi = float(box.lower[0]), float(box.upper[0])
        if process.window is not None:
            wlo, whi = process.window
            if lo < wlo or hi > whi:
                raise OutsideWindow(f"box [{lo}, {hi}] exceeds the sampled window [{wlo}, {whi}]")
        if lo < 0 and process.b_n is None:
            return 0
        pts = process.points
        return int(np.searchsorted(pts, hi, side="right") - np.searchsorted(pts, lo, side="left"))
    if box.dim != process.d:
        raise DomainError(f"box dimension {box.dim} does not match process dimension {process.d}")
    if process.n == 0:
        return 0
    inside = np.all((process.points >= box.lower) & (process.points <= box.upper), axis=1)
    return int(np.count_nonzero(inside))


def counts_in(process, boxes) -> np.ndarray:
    return np.array([count_in(process, b) for b in boxes], dtype=np.int64)


def to_csv(process, stream):
    """Write ``orthant,x1[,x2,...]`` rows with a header line."""
    writer = csv.writer(stream, lineterminator="\n")
    if isinstance(process, ScaledProcess1D):
        writer.writerow(["orthant", "x1"])
        for p in process.points:
            writer.writerow([int(p < 0), repr(float(p))])
        return
    writer.writerow(["orthant"] + [f"x{j + 1}" for j in range(process.d)])
    for k, row in zip(process.orthants, process.points):
        writer.writerow([int(k)] + [repr(float(v)) for v in row])


class ScaledEmpiricalProcess(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`build_scaled_1d`.

    ``fit`` fixes ``n`` and the scaling constants from the training
    sample; ``transform`` maps any values onto the scaled axis.

    Parameters
    ----------
    model : UnivariateModel
        The law the sample is drawn from (scalings invert its CDF).
    q : float
        Quantile level of the anchor.
    """

    def __init__(self, model=None, q=0.0):
        self.model = model
        self.q = q

    def fit(self, X, y=None):
        if self.model is None:
            raise DomainError("a model is required", key="model")
        x = check_sample_1d(X)
        self.n_ = check_count(x.size, "n", minimum=1)
        self.process_ = build_scaled_1d(x, self.model, self.q, self.n_)
        self.anchor_ = self.process_.anchor
        self.a_n_ = self.process_.a_n
        self.b_n_ = self.process_.b_n
        return self

    def transform(self, X):
        check_is_fitted(self, "process_")
        return _scale_1d(check_sample_1d(X), self.anchor_, self.a_n_, self.b_n_)

    def count(self, t):
        """Count of fitted points in ``[0, t]`` (or ``[t, 0]`` for ``t < 0``)."""
        check_is_fitted(self, "process_")
        if not math.isfinite(t):
            raise DomainError("t must be finite")
        return count_in(self.process_, Box.corner(t))
