"""Monte Carlo replication engine and goodness-of-fit checks.

Every check is driven by a :class:`ReplicationConfig`; replication ``r``
reads the Philox stream keyed by ``(seed, r)``, so a report is a pure
function of its configuration.  Replications may run on a thread pool;
results are always reduced in replication order.

Simulations only materialize the part of each sample that can reach the
counting window (see :func:`pll.rvdist.sample_window`), which keeps
``n = 10^5`` with ``10^4`` replications at a few seconds per scenario.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import copula as cop_mod
from . import knn
from ._validation import check_count
from .compensator import exact_compensator_1d, scaled_spec
from .epp import Box, build_scaled_1d, count_in
from .errors import DegenerateTable, DomainError, InsufficientPoints
from .rvdist import (
    GapModel,
    PowerLaw,
    UnivariateModel,
    Uniform,
    sample_around,
    sample_window,
    sample_windows,
    scaling_constants,
)
from .special import chi2_sf, chi_square, gamma_sf, ks_pvalue, ks_statistic, norm_sf, pool_tail

ALPHA_LEVEL = 0.05
ACCEPT_P = 1e-3
NEGATIVE_CONTROL_P = 1e-6


@dataclass(frozen=True)
class ReplicationConfig:
    n: int
    reps: int
    seed: int
    model: UnivariateModel = field(default_factory=lambda: PowerLaw(1.0))
    q: float = 0.0
    threads: int | None = None

    def __post_init__(self):
        check_count(self.n, "n", minimum=1)
        check_count(self.reps, "reps", minimum=1)
        check_count(self.seed, "seed", minimum=0)

    def describe(self):
        return {"n": self.n, "reps": self.reps, "seed": self.seed, "model": self.model.params(), "q": self.q}


@dataclass(frozen=True)
class FitReport:
    test_name: str
    statistic: float
    p_value: float
    reps: int
    n: int
    seed: int
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def decision(self):
        """Decision at level 0.05; checks without a p-value fall back to ``passed``."""
        if math.isnan(self.p_value):
            return "accept" if self.passed else "reject"
        return "reject" if self.p_value < ALPHA_LEVEL else "accept"

    def to_record(self):
        rec = asdict(self)
        rec["decision"] = self.decision
        return rec

    def to_json(self):
        return json.dumps(_jsonable(self.to_record()), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def replicate(config: ReplicationConfig, fn):
    """``[fn(r) for r in range(reps)]``, possibly on a thread pool, in replication order."""
    threads = config.threads or os.cpu_count() or 1
    if threads <= 1 or config.reps < 2:
        return [fn(r) for r in range(config.reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(config.reps), chunksize=max(1, config.reps // (8 * threads))))


# ---------------------------------------------------------------------------
# pure statistical tests


def poisson_fit(counts, means, min_expected=5.0):
    """Pooled chi-square of box counts against Poisson laws.

    ``counts`` has one column per box (one row per replication) and
    ``means[j]`` is the Poisson mean of box ``j``.  The histogram over
    ``0, 1, ..., max`` plus a tail cell is pooled from the tail inward.
    Returns ``(statistic, p_value, cells)``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim == 1:
        counts = counts[:, None]
    means = np.asarray(means, dtype=float).reshape(-1)
    if counts.shape[1] != means.size:
        raise DomainError("one mean per box column is required")
    reps = counts.shape[0]
    top = int(counts.max(initial=0)) + 1
    observed = np.zeros(top + 1)
    for j in range(counts.shape[1]):
        observed[:top] += np.bincount(counts[:, j], minlength=top)[:top]
    ks = np.arange(top)
    expected = np.zeros(top + 1)
    for mu in means:
        expected[:top] += reps * stats.poisson.pmf(ks, mu)
        expected[top] += reps * stats.poisson.sf(top - 1, mu)
    obs, exp = pool_tail(observed, expected, min_expected)
    stat, p = chi_square(obs, exp)
    return stat, p, int(obs.size)


def correlation_test(x, y):
    """Sample correlation with a Fisher-z normal p-value; returns ``(r, p)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.std() == 0 or y.std() == 0:
        raise DegenerateTable("constant counts: correlation undefined")
    r = float(np.corrcoef(x, y)[0, 1])
    r = max(-1.0, min(1.0, r))
    if abs(r) >= 1.0:
        return r, 0.0
    z = math.atanh(r) * math.sqrt(max(x.size - 3, 1))
    return r, float(2.0 * norm_sf(abs(z)))


def contingency_test(x, y, min_expected=5.0):
    """Chi-square independence test on the two-way table of counts.

    Tail categories of each variable are merged (largest first, on the
    variable whose smallest marginal is smaller) until every expected
    cell is at least ``min_expected``.  Returns ``(statistic, p, df)`` or
    ``None`` when no table with a positive df survives.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    cx, cy = int(x.max()), int(y.max())
    while True:
        xi = np.minimum(x, cx)
        yi = np.minimum(y, cy)
        table = np.zeros((cx + 1, cy + 1))
        np.add.at(table, (xi, yi), 1)
        table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
        if min(table.shape) < 2:
            return None
        rows = table.sum(axis=1)
        cols = table.sum(axis=0)
        exp = np.outer(rows, cols) / table.sum()
        if exp.min() >= min_expected:
            break
        if rows.min() <= cols.min():
            cx -= 1
        else:
            cy -= 1
        if cx < 1 or cy < 1:
            return None
    stat = float(np.sum((table - exp) ** 2 / exp))
    df = (table.shape[0] - 1) * (table.shape[1] - 1)
    return stat, float(chi2_sf(stat, df)), df


def exponential_spacing_fit(spacings, rate=1.0):
    """KS test of pooled spacings against Exponential(``rate``); ``(D, p)``."""
    sp = np.asarray(spacings, dtype=float).reshape(-1)
    if sp.size < 5:
        raise InsufficientPoints(f"need at least 5 pooled spacings, have {sp.size}")
    d = ks_statistic(sp, lambda v: 1.0 - np.exp(-rate * v))
    return d, ks_pvalue(d, sp.size)


def mean_check(values, target):
    """z-score of the replication mean against ``target`` and its two-sided p-value."""
    v = np.asarray(values, dtype=float)
    se = v.std(ddof=1) / math.sqrt(v.size)
    if se == 0:
        z = 0.0 if v.mean() == target else math.inf
    else:
        z = (v.mean() - target) / se
    return float(v.mean()), float(se), float(z), float(2.0 * norm_sf(abs(z)))


# ---------------------------------------------------------------------------
# simulation helpers


def _window_process(config, rep, left, right):
    """Windowed scaled process at ``config.q`` reaching ``left``/``right`` scaled units."""
    model = config.model
    anchor = float(model.quantile(config.q))
    a_n, b_n = scaling_constants(model, anchor, config.n)
    lo = anchor - left * b_n if (b_n is not None and left > 0) else anchor
    hi = anchor + right * a_n

    win = sample_window(model, config.seed, config.n, lo, hi, rep)
    return win, build_scaled_1d(win, model, config.q, config.n)


def simulate_counts(config: ReplicationConfig, boxes) -> np.ndarray:
    """Counts of the scaled process at ``config.q`` in each 1-d box, per replication."""
    boxes = list(boxes)
    left = max(0.0, -min(float(b.lower[0]) for b in boxes))
    right = max(0.0, max(float(b.upper[0]) for b in boxes))

    def one(rep):
        _, proc = _window_process(config, rep, left, right)
        return [count_in(proc, b) for b in boxes]

    return np.array(replicate(config, one), dtype=np.int64).reshape(config.reps, len(boxes))


def poisson_count_test(config: ReplicationConfig, boxes, means) -> FitReport:
    """Chi-square fit of the scaled-process counts in ``boxes`` to Poisson(``means``)."""
    counts = simulate_counts(config, boxes)
    stat, p, cells = poisson_fit(counts, means)
    return FitReport(
        "poisson_count",
        stat,
        p,
        config.reps,
        config.n,
        config.seed,
        p > ACCEPT_P,
        {"cells": cells, "means": list(map(float, means)), "mean_counts": counts.mean(axis=0).tolist()},
    )


def independence_test(config: ReplicationConfig, pair) -> FitReport:
    """Correlation and contingency tests between two counts.

    ``pair`` holds two ``(q, Box)`` entries; the quantile processes are
    built from the same sample in every replication.
    """
    (q1, box1), (q2, box2) = pair
    procs = {}
    for q, box in ((q1, box1), (q2, box2)):
        left = max(0.0, -float(box.lower[0]))
        right = max(0.0, float(box.upper[0]))
        prev = procs.get(q, (0.0, 0.0))
        procs[q] = (max(prev[0], left), max(prev[1], right))
    model = config.model
    windows = {}
    for q, (left, right) in procs.items():
        anchor = float(model.quantile(q))
        a_n, b_n = scaling_constants(model, anchor, config.n)
        lo = anchor - left * b_n if (b_n is not None and left > 0) else anchor
        windows[q] = (lo, anchor + right * a_n)

    qs = list(windows)

    def one(rep):
        wins = sample_windows(model, config.seed, config.n, [windows[q] for q in qs], rep)
        byq = {q: build_scaled_1d(w, model, q, config.n) for q, w in zip(qs, wins)}
        return count_in(byq[q1], box1), count_in(byq[q2], box2)

    pairs = np.array(replicate(config, one), dtype=np.int64)
    r, p = correlation_test(pairs[:, 0], pairs[:, 1])
    table = contingency_test(pairs[:, 0], pairs[:, 1])
    extra = {"quantiles": [q1, q2]}
    if table is not None:
        extra.update({"chi2": table[0], "chi2_p": table[1], "df": table[2]})
    return FitReport("independence", r, p, config.reps, config.n, config.seed, p > ACCEPT_P, extra)


def first_arrivals(config: ReplicationConfig, rep: int, m: int) -> np.ndarray:
    """The ``m`` smallest scaled points to the right of the anchor."""
    model = config.model
    anchor = float(model.quantile(config.q))
    a_n, _ = scaling_constants(model, anchor, config.n)
    win = sample_around(model, config.seed, config.n, anchor, 0, m, rep)
    right = win.values[win.values >= anchor]
    if right.size < m:
        raise InsufficientPoints(f"only {right.size} points right of the anchor")
    return (right[:m] - anchor) / a_n


def timechange_spacing_test(config: ReplicationConfig, alpha=None, m=5, rate=None) -> FitReport:
    """KS test of time-changed spacings of the first ``m`` arrivals.

    Under the limit, ``s = rate * t**alpha`` turns the scaled process into
    a unit-rate Poisson process, so the spacings of ``0, s_1, ..., s_m``
    are i.i.d. standard exponential.  ``alpha`` defaults to the model's
    right index at the anchor and ``rate`` to the matching scaled rate.
    """
    model = config.model
    anchor = float(model.quantile(config.q))
    a_n, b_n = scaling_constants(model, anchor, config.n)
    spec = scaled_spec(model, anchor, a_n, b_n, config.n)
    alpha = spec.alpha_right if alpha is None else float(alpha)
    rate = spec.omega_right if rate is None else float(rate)

    def one(rep):
        s = first_arrivals(config, rep, m) ** alpha
        return np.diff(np.concatenate([[0.0], s]))

    spacings = np.concatenate(replicate(config, one))
    d, p = exponential_spacing_fit(rate * spacings)
    return FitReport(
        "timechange_spacing",
        d,
        p,
        config.reps,
        config.n,
        config.seed,
        p > ACCEPT_P,
        {"alpha_used": alpha, "alpha_model": spec.alpha_right, "arrivals": m, "pooled": int(spacings.size)},
    )


# ---------------------------------------------------------------------------
# scenario suites (each returns a list of FitReports)

THEOREM31_T = (0.25, 0.5, 1.0)
MARTINGALE_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)


def _mean_report(name, values, target, config, extra=None):
    mean, se, z, p = mean_check(values, target)
    info = {"mean": mean, "se": se, "target": target}
    info.update(extra or {})
    return FitReport(name, z, p, config.reps, config.n, config.seed, abs(z) <= 3.0, info)


def suite_theorem31(alpha=2.0, n=100_000, reps=10_000, seed=7, threads=None):
    """Counts fit Poisson(1) on [0, 1]; means t**alpha; N - Lambda has mean zero."""
    config = ReplicationConfig(n, reps, seed, PowerLaw(alpha), 0.0, threads)
    grid = np.array(sorted(set(THEOREM31_T) | set(MARTINGALE_GRID)))

    def one(rep):
        win, proc = _window_process(config, rep, 0.0, float(grid.max()))
        counts = [count_in(proc, Box.corner(t)) for t in grid]
        comp = exact_compensator_1d(win, config.model, proc.anchor, proc.a_n, proc.b_n, grid).values
        return counts, comp

    out = replicate(config, one)
    counts = np.array([o[0] for o in out], dtype=np.int64)
    comp = np.array([o[1] for o in out])
    col = {float(t): i for i, t in enumerate(grid)}
    reports = []
    stat, p, cells = poisson_fit(counts[:, col[1.0]], [1.0])
    reports.append(
        FitReport(f"theorem31_poisson[0,1]_alpha={alpha}", stat, p, reps, n, seed, p > ACCEPT_P, {"cells": cells})
    )
    for t in THEOREM31_T:
        reports.append(_mean_report(f"theorem31_mean[0,{t}]_alpha={alpha}", counts[:, col[t]], t**alpha, config))
    for t in MARTINGALE_GRID:
        diff = counts[:, col[t]] - comp[:, col[t]]
        reports.append(_mean_report(f"martingale[0,{t}]_alpha={alpha}", diff, 0.0, config))
    return reports


def compensator_l2(alpha, n, reps, seed, t=1.0, threads=None):
    """Replication mean of ``(Lambda_t - t**alpha)**2``."""
    config = ReplicationConfig(n, reps, seed, PowerLaw(alpha), 0.0, threads)

    def one(rep):
        win, proc = _window_process(config, rep, 0.0, t)
        return exact_compensator_1d(win, config.model, proc.anchor, proc.a_n, proc.b_n, [t]).values[0]

    vals = np.array(replicate(config, one))
    return float(np.mean((vals - t**alpha) ** 2))


def suite_compensator_l2(alpha=1.0, ns=(1_000, 10_000, 100_000), reps=2_000, seed=11, threads=None):
    errs = [compensator_l2(alpha, n, reps, seed, threads=threads) for n in ns]
    monotone = all(errs[i + 1] <= errs[i] for i in range(len(errs) - 1))
    passed = monotone and errs[-1] < 0.01
    return [
        FitReport(
            f"compensator_l2_alpha={alpha}",
            errs[-1],
            math.nan,
            reps,
            int(ns[-1]),
            seed,
            passed,
            {"n": list(ns), "mse": errs, "nonincreasing": monotone},
        )
    ]


def suite_two_sided(n=100_000, reps=10_000, seed=13, ts=(0.5, 1.0), threads=None):
    """Uniform at the median: counts on each side fit Poisson(t)."""
    config = ReplicationConfig(n, reps, seed, Uniform(0.0, 1.0), 0.5, threads)
    boxes = [Box.corner(t) for t in ts] + [Box.corner(-t) for t in ts]
    counts = simulate_counts(config, boxes)
    reports = []
    for j, box in enumerate(boxes):
        t = float(box.upper[0] if box.upper[0] > 0 else box.lower[0])
        stat, p, cells = poisson_fit(counts[:, j], [abs(t)])
        reports.append(
            FitReport(f"two_sided_poisson[t={t}]", stat, p, reps, n, seed, p > ACCEPT_P, {"cells": cells})
        )
    return reports


def suite_multiquantile(qs=(0.3, 0.7), K=1.0, n=100_000, reps=10_000, seed=17, threads=None):
    config = ReplicationConfig(n, reps, seed, Uniform(0.0, 1.0), qs[0], threads)
    rep = independence_test(config, [(qs[0], Box.corner(K)), (qs[1], Box.corner(K))])
    return [
        FitReport(
            f"multiquantile_independence{tuple(qs)}",
            rep.statistic,
            rep.p_value,
            rep.reps,
            rep.n,
            rep.seed,
            abs(rep.statistic) < 0.05,
            rep.extra,
        )
    ]


def suite_timechange(alpha=2.0, n=100_000, reps=1_000, seed=19, wrong_alpha=1.0, m=5, threads=None):
    config = ReplicationConfig(n, reps, seed, PowerLaw(alpha), 0.0, threads)
    good = timechange_spacing_test(config, m=m)
    bad = timechange_spacing_test(config, alpha=wrong_alpha, m=m)
    bad = FitReport(
        f"timechange_negative_control_alpha={wrong_alpha}",
        bad.statistic,
        bad.p_value,
        bad.reps,
        bad.n,
        bad.seed,
        bad.p_value < NEGATIVE_CONTROL_P,
        bad.extra,
    )
    return [good, bad]


def knn_ratios(k, n, reps, seed, t=0.5, level=None, threads=None):
    """Replications of ``f_hat_k(n, t) / f(t)`` (and intervals) under Uniform(0, 1)."""
    model = Uniform(0.0, 1.0)
    config = ReplicationConfig(n, reps, seed, model, t, threads)

    def one(rep):
        win = sample_around(model, seed, n, t, k, k, rep)
        est = knn.estimate(win.values, t, k, n, level if k > 1 else None)
        ci = est.ci[1:] if est.ci else (math.nan, math.nan)
        return est.value, ci[0], ci[1]

    out = np.array(replicate(config, one))
    return out[:, 0], out[:, 1:]


def suite_knn_law(k=2, n=100_000, reps=10_000, seed=23, threads=None, ratios=None):
    """Law of the UMVU ratio: KS, mean and variance against (2k-1) InvGamma(2k, 1)."""
    if ratios is None:
        ratios, _ = knn_ratios(k, n, reps, seed, threads=threads)
    law = knn.ratio_law(k)
    d = ks_statistic(ratios, lambda x: knn.invgamma_cdf(law, x))
    variance = float(np.var(ratios, ddof=1))
    target_var = law.variance
    mean, se, z, p_mean = mean_check(ratios, 1.0)
    extra = {
        "k": k,
        "ks_p": ks_pvalue(d, ratios.size),
        "mean": mean,
        "mean_se": se,
        "mean_z": z,
        "variance": variance,
        "variance_target": target_var,
        "variance_rel_err": abs(variance - target_var) / target_var,
        "second_moment": float(np.mean(ratios**2)),
        "second_moment_target": law.second_moment,
        "quoted_asymptotic_variance": 1.0 + 1.0 / (2 * k - 2),
    }
    passed = d < 0.02 and abs(z) <= 3.0 and extra["variance_rel_err"] < 0.10
    return [FitReport(f"knn_law_k={k}", d, extra["ks_p"], reps, n, seed, passed, extra)]


def suite_ci_coverage(k=5, level=0.95, n=100_000, reps=10_000, seed=29, threads=None, intervals=None):
    if intervals is None:
        _, intervals = knn_ratios(k, n, reps, seed, level=level, threads=threads)
    covered = (intervals[:, 0] <= 1.0) & (1.0 <= intervals[:, 1])
    rate = float(covered.mean())
    se = math.sqrt(level * (1 - level) / reps)
    z = (rate - level) / se
    return [
        FitReport(
            f"ci_coverage_k={k}_level={level}",
            rate,
            float(2.0 * norm_sf(abs(z))),
            reps,
            n,
            seed,
            abs(rate - level) <= 0.01,
            {"level": level, "coverage": rate, "z": z},
        )
    ]


def gap_statistics(model, k, n, reps, seed, threads=None):
    config = ReplicationConfig(n, reps, seed, model, 0.0, threads)

    def one(rep):
        win = sample_around(model, seed, n, 0.0, 0, k, rep)
        return knn.lr_gap_test(win.values, k)

    return np.array(replicate(config, one))


def product_of_uniforms_cdf(x, k):
    """CDF of a product of ``k - 1`` independent uniforms (Gamma tail of ``-log x``)."""
    x = np.asarray(x, dtype=float)

    with np.errstate(divide="ignore"):
        return np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, gamma_sf(k - 1.0, -np.log(np.clip(x, 1e-300, 1)))))


def suite_gap_test(k=3, n=10_000, reps=10_000, seed=31, power_n=1_000, power_reps=2_000, gap=(0.0, 0.2), threads=None):
    """Null calibration of the gap test and its power against a gap at 0."""
    null = gap_statistics(PowerLaw(1.0), k, n, reps, seed, threads)
    d_p = ks_statistic(null[:, 1], lambda u: np.clip(u, 0.0, 1.0))
    if k == 3:
        # closed form for a product of two uniforms, independent of the gamma route
        def oracle(x):
            x = np.clip(x, 1e-300, 1.0)
            return x * (1.0 - np.log(x))
    else:
        def oracle(x):
            return product_of_uniforms_cdf(x, k)
    d_t = ks_statistic(null[:, 0], oracle)
    alt = gap_statistics(GapModel(*gap), k, power_n, power_reps, seed + 1, threads)
    power = float(np.mean(alt[:, 1] < ALPHA_LEVEL))
    return [
        FitReport(f"gap_null_pvalues_k={k}", d_p, ks_pvalue(d_p, reps), reps, n, seed, d_p < 0.02),
        FitReport(f"gap_null_statistic_cdf_k={k}", d_t, ks_pvalue(d_t, reps), reps, n, seed, d_t < 0.02),
        FitReport(
            f"gap_power_gap={gap}",
            power,
            math.nan,
            power_reps,
            power_n,
            seed + 1,
            power > 0.5,
            {"level": ALPHA_LEVEL},
        ),
    ]


TAIL_X_GRID = tuple(np.geomspace(1e-4, 1e-2, 9))
TAIL_T_GRID = ((1.0, 1.0), (0.5, 0.5), (0.5, 1.0), (1.0, 0.5), (2.0, 2.0), (1.0, 2.0))


def suite_copula_tail(rhos=(0.25, 0.5, 0.75), x_grid=TAIL_X_GRID, t_grid=TAIL_T_GRID):
    reports = []
    for rho in rhos:
        est = cop_mod.fit_tail_law(cop_mod.NormalCopula(rho), x_grid, t_grid)
        target = 2.0 / (1.0 + rho)
        rel = abs(est.exponent - target) / target
        reports.append(
            FitReport(
                f"copula_tail_exponent_rho={rho}",
                est.exponent,
                math.nan,
                0,
                0,
                0,
                rel < 0.05,
                {"target": target, "rel_err": rel, "W": {f"{a},{b}": v for (a, b), v in est.w.items()}},
            )
        )
    return reports


EXTREME_BOXES = (Box([-1.0, -1.0], [0.0, 0.0]), Box([-2.0, -2.0], [-1.0, -1.0]))


def extremes_count_matrix(rho, n, reps, seed, boxes=EXTREME_BOXES, threads=None):
    cop = cop_mod.NormalCopula(rho)
    config = ReplicationConfig(n, reps, seed, Uniform(), 0.0, threads)
    return np.array(replicate(config, lambda r: cop_mod.extremes_counts(cop, seed, n, boxes, r)), dtype=np.int64)


def suite_copula_extremes(rho=0.5, ns=(10_000, 100_000), reps=10_000, seed=37, threads=None):
    """Stabilization of the unit-box mean count and independence of disjoint boxes."""
    cop = cop_mod.NormalCopula(rho)
    mats = [extremes_count_matrix(rho, n, reps, seed, threads=threads) for n in ns]
    means = [float(m[:, 0].mean()) for m in mats]
    exact = [n * cop_mod.joint_tail(cop, cop_mod.extremes_scaling(cop, n), 1.0, 1.0) for n in ns]
    change = abs(means[-1] - means[-2]) / means[-2]
    r, p = correlation_test(mats[-1][:, 0], mats[-1][:, 1])
    x0 = 1e-8
    norm_const = cop_mod.joint_tail(cop, x0, 1.0, 1.0) / x0 ** (2.0 / (1.0 + rho))
    return [
        FitReport(
            f"extremes_stabilization_rho={rho}",
            change,
            math.nan,
            reps,
            int(ns[-1]),
            seed,
            change < 0.10,
            {"n": list(ns), "mean_count": means, "exact_mean": exact, "normalization_at_1e-8": norm_const},
        ),
        FitReport(
            f"extremes_disjoint_boxes_rho={rho}",
            r,
            p,
            reps,
            int(ns[-1]),
            seed,
            abs(r) < 0.05,
            {"boxes": [[b.lower.tolist(), b.upper.tolist()] for b in EXTREME_BOXES]},
        ),
    ]


SCENARIOS = {
    "theorem31": suite_theorem31,
    "compensator-l2": suite_compensator_l2,
    "two-sided": suite_two_sided,
    "multiquantile": suite_multiquantile,
    "timechange": suite_timechange,
    "knn-law": suite_knn_law,
    "ci-coverage": suite_ci_coverage,
    "gap-test": suite_gap_test,
    "copula-tail": suite_copula_tail,
    "copula-extremes": suite_copula_extremes,
}
