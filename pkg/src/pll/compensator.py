"""*-compensators of scaled empirical point processes.

In one dimension the compensator of the empirical process has a closed
form: each observation contributes ``-log S`` (right side) or ``log F``
(left side) integrated up to the point where it is passed, so no
quadrature is needed.  The joint compensator of several quantile
processes and the bivariate compensator are evaluated numerically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_vector, check_count, check_probability
from .errors import DegenerateSurvival, DomainError, OutsideWindow, WindowsOverlap
from .rvdist import RegVarSpec, UnivariateModel, WindowSample, as_window, scaling_constants

SIMPSON_TOL = 1e-8
SIMPSON_MAX_EVALS = 2**20


@dataclass(frozen=True)
class CompensatorPath:
    grid: np.ndarray
    values: np.ndarray
    limit: np.ndarray

    def to_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["t", "value", "limit"])
        for t, v, lim in zip(self.grid, self.values, self.limit):
            writer.writerow([repr(float(t)), repr(float(v)), repr(float(lim))])


def limit_measure(spec: RegVarSpec, t):
    """Mean measure of ``[0, t]`` (or ``[t, 0]``) for the Poisson limit at ``spec``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) and spec.beta_left is None:
        raise DomainError(f"no left index at anchor {spec.anchor}; t must be >= 0")
    right = spec.omega_right * np.abs(t) ** spec.alpha_right
    if spec.beta_left is None:
        out = right
    else:
        left = spec.omega_left * np.abs(t) ** spec.beta_left
        out = np.where(t >= 0, right, left)
    return float(out) if out.ndim == 0 else out


def scaled_spec(model: UnivariateModel, anchor: float, a_n: float, b_n: float | None, n: int) -> RegVarSpec:
    """The local law at ``anchor`` re-expressed on the scaled axis.

    ``n (F(u + a_n t) - F(u)) ~ omega * n * a_n**alpha * t**alpha``, so the
    rates absorb ``n a_n**alpha``; with exact quantile scalings that factor
    tends to 1, with ``n**(-1/alpha)`` scalings the rate is ``omega``.
    """
    raw = model.regvar(anchor)
    right = raw.omega_right * n * a_n**raw.alpha_right
    if raw.beta_left is None or b_n is None:
        return RegVarSpec(anchor, raw.alpha_right, None, right)
    left = raw.omega_left * n * b_n**raw.beta_left
    return RegVarSpec(anchor, raw.alpha_right, raw.beta_left, right, left)


def _log_sf(model, x):
    with np.errstate(divide="ignore"):
        return np.log1p(-np.asarray(model.cdf(x), dtype=float))


def _log_cdf(model, x):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(model.cdf(x), dtype=float))


def exact_compensator_1d(sample, model, anchor, a_n, b_n, grid, spec=None) -> CompensatorPath:
    """Closed-form compensator of the two-sided scaled process on ``grid``.

    For ``t >= 0`` every observation contributes
    ``log S(anchor) - log S(min(anchor + a_n t, max(Y, anchor)))`` with
    ``S = 1 - F``; for ``t < 0`` the mirror expression in ``log F`` with
    ``b_n``.  ``sample`` may be a full array or a
    :class:`~pll.rvdist.WindowSample` covering the evaluation range.
    """
    grid = as_vector(grid)
    win = sample if isinstance(sample, WindowSample) else as_window(sample)
    n = win.n
    vals = np.asarray(win.values, dtype=float)
    out = np.empty(grid.size)

    right_vals = vals[vals >= anchor]
    left_vals = vals[vals <= anchor]
    log_s0 = float(_log_sf(model, anchor))
    log_f0 = float(_log_cdf(model, anchor)) if np.any(grid < 0) else 0.0

    for idx, t in enumerate(grid):
        if t == 0:
            out[idx] = 0.0
            continue
        if t > 0:
            x_t = anchor + a_n * t
            if not win.is_full and (win.lo > anchor or x_t > win.hi):
                raise OutsideWindow(f"right integration limit {x_t} outside window [{win.lo}, {win.hi}]")
            stop = np.minimum(right_vals, x_t)
            if win.n_above:
                stop = np.append(stop, x_t)
            with np.errstate(divide="ignore"):
                inside = log_s0 - _log_sf(model, stop)
            if not np.all(np.isfinite(inside)):
                raise DegenerateSurvival(f"survival function vanishes at {x_t}", t=float(t))
            if win.n_above:
                inside[-1] *= win.n_above
            out[idx] = float(np.sum(inside))
        else:
            if b_n is None:
                raise DomainError("negative grid points need a left scaling b_n")
            x_t = anchor + b_n * t
            if not win.is_full and (win.hi < anchor or x_t < win.lo):
                raise OutsideWindow(f"left integration limit {x_t} outside window [{win.lo}, {win.hi}]")
            stop = np.maximum(left_vals, x_t)
            if win.n_below:
                stop = np.append(stop, x_t)
            inside = log_f0 - _log_cdf(model, stop)
            if not math.isfinite(log_f0) or not np.all(np.isfinite(inside)):
                raise DegenerateSurvival(f"distribution function vanishes at {x_t}", t=float(t))
            if win.n_below:
                inside[-1] *= win.n_below
            out[idx] = float(np.sum(inside))

    if spec is None:
        spec = scaled_spec(model, anchor, a_n, b_n, n)
    return CompensatorPath(grid, out, _limit_on(spec, grid))


def _limit_on(spec, grid):
    return np.array([limit_measure(spec, t) if t >= 0 or spec.beta_left is not None else np.nan for t in grid])


class _Budget:
    def __init__(self, max_evals):
        self.left = max_evals


def adaptive_simpson(fn, a, b, tol=SIMPSON_TOL, max_evals=SIMPSON_MAX_EVALS, _budget=None):
    """Adaptive Simpson quadrature of ``fn`` over ``[a, b]`` to absolute ``tol``.

    Raises ``RuntimeError`` if the evaluation budget runs out before the
    tolerance is met.
    """
    if a == b:
        return 0.0
    budget = _budget or _Budget(max_evals)
    fa, fm, fb = fn(a), fn(0.5 * (a + b)), fn(b)
    budget.left -= 3
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fn(lm), fn(rm)
        budget.left -= 2
        if budget.left < 0:
            raise RuntimeError("adaptive Simpson exceeded its evaluation budget")
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if abs(delta) <= 15.0 * eps or depth >= 50:
            total += left + right + delta / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
    return total


def _quantile_windows(model, quantiles, K, n):
    anchors, scales = [], []
    for q in quantiles:
        q = check_probability(q, "quantiles")
        x = float(model.quantile(q))
        a, b = scaling_constants(model, x, n)
        anchors.append(x)
        scales.append((a, b))
    bounds = [(x - K * b if b is not None else x, x + K * a) for x, (a, b) in zip(anchors, scales)]
    return anchors, scales, bounds


def _disjoint(bounds):
    order = sorted(bounds)
    return all(order[i][1] < order[i + 1][0] for i in range(len(order) - 1))


def _min_disjoint_n(model, quantiles, K, n):
    def ok(m):
        try:
            return _disjoint(_quantile_windows(model, quantiles, K, m)[2])
        except DomainError:
            return False

    hi = n
    while not ok(hi):
        hi *= 2
        if hi > 2**48:
            return None
    lo = max(n, hi // 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return hi


def joint_compensator(sample, model, quantiles, K, n, grid, tol=SIMPSON_TOL) -> list[CompensatorPath]:
    """Compensators of several quantile processes w.r.t. their common history.

    Uses the exclusion set ``U_s``: the union over quantiles ``l`` of
    ``[x_l - K b_l, x_l + s a_l]`` for ``s >= 0`` (mirrored for ``s < 0``).
    The integrand ``#{Y not in U_s} dF(x_i + a_i s) / (1 - F(U_s))`` is
    piecewise smooth; it is split at the observations' crossing times and
    each piece is integrated by adaptive Simpson in the probability scale
    ``v = F(x_i + a_i s)``.
    """
    n = check_count(n, "n", minimum=1)
    K = float(K)
    grid = as_vector(grid)
    if not K > 0:
        raise DomainError(f"window K must be positive, got {K}", key="K")
    if np.any(np.abs(grid) > K):
        raise DomainError(f"grid must lie in [-K, K] = [{-K}, {K}]")
    anchors, scales, bounds = _quantile_windows(model, quantiles, K, n)
    if not _disjoint(bounds):
        min_n = _min_disjoint_n(model, quantiles, K, n)
        raise WindowsOverlap(
            f"quantile windows overlap at n={n}; they separate from n={min_n} on", min_n=min_n
        )
    win = sample if isinstance(sample, WindowSample) else as_window(sample)
    if win.n != n:
        raise DomainError(f"sample size {win.n} does not match n={n}")
    hull = (min(b[0] for b in bounds), max(b[1] for b in bounds))
    if not win.is_full and not win.covers(*hull):
        raise OutsideWindow(f"sample window [{win.lo}, {win.hi}] does not cover {hull}")
    y = np.asarray(win.values, dtype=float)
    y = y[(y >= hull[0]) & (y <= hull[1])]

    m = len(anchors)
    x = np.array(anchors)
    a = np.array([s[0] for s in scales])
    b = np.array([np.nan if s[1] is None else s[1] for s in scales])

    def exclusion(s):
        # interval endpoints of U_s
        if s >= 0:
            lo = np.where(np.isnan(b), x, x - K * np.nan_to_num(b))
            hi = x + s * a
        else:
            lo = x + s * b
            hi = x + K * a
        return lo, hi

    def mass(lo, hi):
        return float(np.sum(np.asarray(model.cdf(hi)) - np.asarray(model.cdf(lo))))

    def outside_count(s):
        lo, hi = exclusion(s)
        inside = 0
        for l in range(m):
            inside += int(np.searchsorted(y, hi[l], side="right") - np.searchsorted(y, lo[l], side="left"))
        return n - inside

    paths = []
    budget = _Budget(SIMPSON_MAX_EVALS)
    for i in range(m):
        values = np.zeros(grid.size)
        for gi, t in enumerate(grid):
            if t == 0:
                continue
            if t < 0 and np.isnan(b[i]):
                raise DomainError(f"quantile {quantiles[i]} has no left scaling; t must be >= 0")
            scale_i = a[i] if t > 0 else b[i]

            # integrate in v = F(x_i + scale_i s): dF becomes dv and the
            # integrand 1 / (1 - F(U_s)) stays bounded even where f is not
            def weight(v, scale_i=scale_i):
                s = (float(model.quantile(min(max(v, 0.0), 1.0))) - x[i]) / scale_i
                lo, hi = exclusion(s)
                surv = 1.0 - mass(lo, hi)
                if surv <= 0:
                    raise DegenerateSurvival(f"1 - F(U_s) vanishes at s={s}")
                return 1.0 / surv

            s_lo, s_hi = (0.0, float(t)) if t > 0 else (float(t), 0.0)
            cuts = [s_lo, s_hi]
            for l in range(m):
                if t > 0:
                    c = (y[(y > x[l]) & (y < x[l] + s_hi * a[l])] - x[l]) / a[l]
                elif not np.isnan(b[l]):
                    c = (y[(y < x[l]) & (y > x[l] + s_lo * b[l])] - x[l]) / b[l]
                else:
                    c = np.empty(0)
                cuts.extend(c.tolist())
            cuts = np.unique(np.clip(cuts, s_lo, s_hi))
            v_cuts = np.asarray(model.cdf(x[i] + scale_i * cuts), dtype=float)
            total = 0.0
            v_span = v_cuts[-1] - v_cuts[0]
            for k in range(len(cuts) - 1):
                v0, v1 = v_cuts[k], v_cuts[k + 1]
                if v1 <= v0:
                    continue
                count = outside_count(0.5 * (cuts[k] + cuts[k + 1]))
                if count == 0:
                    continue
                piece_tol = tol * (v1 - v0) / v_span / count
                total += count * adaptive_simpson(weight, v0, v1, piece_tol, _budget=budget)
            values[gi] = total
        spec = scaled_spec(model, x[i], a[i], None if np.isnan(b[i]) else b[i], n)
        limit = _limit_on(spec, grid)
        paths.append(CompensatorPath(grid, values, limit))
    return paths


def compensator_2d(sample, joint_cdf, joint_survival, scaling, t, resolution=256) -> float:
    """Bivariate compensator over ``[0, t1] x [0, t2]`` on the scaled axes.

    Evaluates ``sum_i I{Y_i >= s u} dF(s u) / Fbar(s u)`` (``s`` the
    scaling) on a ``resolution x resolution`` cell grid.  Each cell's
    ``dF`` is the second difference of ``joint_cdf`` over the cell and
    ``Fbar`` is taken at the cell midpoint.  The indicator is integrated
    exactly within each cell (fraction of the cell dominated by ``Y_i``),
    which keeps the scheme second order when observations fall inside
    the box.

    ``joint_cdf`` and ``joint_survival`` take arrays of shape ``(..., 2)``.
    Only the positive quadrant is handled; reflect coordinates for others.
    """
    t = as_vector(t)
    if t.size != 2 or np.any(t < 0):
        raise DomainError("t must be a 2-vector in the positive quadrant")
    m = check_count(resolution, "resolution", minimum=1)
    y = np.asarray(sample, dtype=float).reshape(-1, 2) / float(scaling)
    if y.shape[0] == 0 or np.any(t == 0):
        return 0.0
    e1 = np.linspace(0.0, t[0], m + 1)
    e2 = np.linspace(0.0, t[1], m + 1)
    g1, g2 = np.meshgrid(e1 * scaling, e2 * scaling, indexing="ij")
    F = np.asarray(joint_cdf(np.stack([g1, g2], axis=-1)), dtype=float)
    dF = F[1:, 1:] - F[:-1, 1:] - F[1:, :-1] + F[:-1, :-1]
    mid1 = 0.5 * (e1[1:] + e1[:-1]) * scaling
    mid2 = 0.5 * (e2[1:] + e2[:-1]) * scaling
    M1, M2 = np.meshgrid(mid1, mid2, indexing="ij")
    surv = np.asarray(joint_survival(np.stack([M1, M2], axis=-1)), dtype=float)
    if np.any(surv <= 0):
        raise DegenerateSurvival("joint survival vanishes inside the integration box")

    relevant = np.all(y >= 0, axis=1)
    y = y[relevant]
    full = np.all(y >= t, axis=1)
    partial = y[~full]
    h1 = e1[1] - e1[0]
    h2 = e2[1] - e2[0]
    frac1 = np.clip((partial[:, [0]] - e1[None, :-1]) / h1, 0.0, 1.0)
    frac2 = np.clip((partial[:, [1]] - e2[None, :-1]) / h2, 0.0, 1.0)
    weight = frac1.T @ frac2 + np.count_nonzero(full)
    return float(np.sum(weight * dF / surv))
