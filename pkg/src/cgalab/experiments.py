"""Seeded desk-scale experiments on the cGA and the UMDA.

Trial ``j`` of any experiment uses the random stream ``(seed, j)``; results
are collected in trial order, so every table is a pure function of its
configuration and seed, whatever the number of worker processes.
"""
from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .algorithms import RunResult, TraceRecord, UmdaParams, optimum_prob, run_cga, run_umda
from .benchmarks import FitnessFunction, LEADINGONES
from .core import ModelParams, make_well_behaved

__all__ = [
    "Rule", "parse_rule", "run_trials", "ScalingRow", "ScalingReport", "fit_power_law",
    "scaling_experiment", "StayHigh", "stay_high_analysis", "below_quarter_rate",
    "CriticalAdvance", "critical_advance_analysis", "optimum_prob", "CompareRow",
    "compare_cga_umda", "TraceRecord", "RunResult",
]

_RULE_RE = re.compile(r"^\s*(\d+(?:\.\d*)?|\.\d+)\s*\*\s*(n\*ln2n|n\*lnn|mu\*n\*lnn|mu)\s*$")


@dataclass(frozen=True)
class Rule:
    """A named scaling rule ``c * form``.

    Forms: ``n*ln2n`` (c n ln^2 n), ``n*lnn`` (c n ln n), ``mu*n*lnn``
    (c mu n ln n) and ``mu`` (c mu).
    """

    coef: float
    form: str

    def __call__(self, n: int, mu: float | None = None) -> float:
        ln = math.log(n)
        if self.form == "n*ln2n":
            return self.coef * n * ln * ln
        if self.form == "n*lnn":
            return self.coef * n * ln
        if mu is None:
            raise ValueError(f"rule {self} needs mu")
        if self.form == "mu*n*lnn":
            return self.coef * mu * n * ln
        return self.coef * mu

    def __str__(self):
        return f"{self.coef:g}*{self.form}"


def parse_rule(text: str | Rule) -> Rule:
    if isinstance(text, Rule):
        return text
    match = _RULE_RE.match(text.replace(" ", ""))
    if not match:
        raise ValueError(f"unrecognised rule {text!r}; expected c*n*ln2n, c*n*lnn, c*mu*n*lnn or c*mu")
    return Rule(float(match.group(1)), match.group(2))


def _cga_trial(stream: int, params: ModelParams, f: FitnessFunction, budget: int, seed: int,
               trace_every: int | None) -> RunResult:
    return run_cga(params, f, budget, seed, stream, trace_every)


def _umda_trial(stream: int, params: UmdaParams, f: FitnessFunction, budget: int, seed: int,
                trace_every: int | None) -> RunResult:
    return run_umda(params, f, budget, seed, stream, trace_every)


def _map_trials(fn: Callable[[int], RunResult], trials: int, workers: int) -> list[RunResult]:
    if workers <= 1:
        return [fn(j) for j in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def run_trials(params: ModelParams, f: FitnessFunction, budget: int, trials: int, seed: int,
               trace_every: int | None = None, workers: int = 1) -> list[RunResult]:
    """``trials`` independent cGA runs on streams ``0 .. trials-1``."""
    fn = partial(_cga_trial, params=params, f=f, budget=budget, seed=seed, trace_every=trace_every)
    return _map_trials(fn, trials, workers)


# --- scaling ----------------------------------------------------------------

@dataclass
class ScalingRow:
    n: int
    mu: float
    budget: int
    trials: int
    success_rate: float
    median_evals: float
    iqr_lo: float
    iqr_hi: float
    mean_evals: float
    mean_first_all_high: float
    below_quarter_rate: float


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    slope: float | None
    intercept: float | None
    r_squared: float | None
    results: dict[int, list[RunResult]] = field(default_factory=dict, repr=False)


def fit_power_law(ns: Sequence[float], values: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through ``(ln n, ln value)``: slope, intercept, r^2."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def _summarise(n: int, params_mu: float, budget: int, results: list[RunResult]) -> ScalingRow:
    hits = np.array([r.hit_time_evals for r in results if r.success], dtype=float)
    highs = [r.first_all_high_iter for r in results if r.first_all_high_iter is not None]
    if hits.size:
        lo, med, hi = np.percentile(hits, [25, 50, 75])
        mean = float(hits.mean())
    else:
        lo = med = hi = mean = math.nan
    return ScalingRow(
        n=n, mu=params_mu, budget=budget, trials=len(results),
        success_rate=hits.size / len(results),
        median_evals=float(med), iqr_lo=float(lo), iqr_hi=float(hi), mean_evals=mean,
        mean_first_all_high=float(np.mean(highs)) if highs else math.nan,
        below_quarter_rate=below_quarter_rate(results),
    )


def scaling_experiment(n_grid: Iterable[int], mu_rule: str | Rule, budget_rule: str | Rule,
                       trials: int, seed: int, f: FitnessFunction = LEADINGONES,
                       workers: int = 1) -> ScalingReport:
    """Seeded cGA runs over ``n_grid`` and a power-law fit of median runtimes.

    ``mu_rule`` gives the target step size (snapped to a well-behaved value);
    ``budget_rule`` the evaluation budget from ``n`` and the snapped ``mu``.
    """
    mu_rule, budget_rule = parse_rule(mu_rule), parse_rule(budget_rule)
    rows, by_n = [], {}
    for n in sorted(set(n_grid)):
        params = make_well_behaved(n, mu_rule(n))
        budget = int(budget_rule(n, params.mu))
        results = run_trials(params, f, budget, trials, seed, workers=workers)
        by_n[n] = results
        rows.append(_summarise(n, params.mu, budget, results))
    fitted = [r for r in rows if r.success_rate > 0]
    if len(fitted) >= 3:
        slope, intercept, r2 = fit_power_law([r.n for r in fitted], [r.median_evals for r in fitted])
    else:
        slope = intercept = r2 = None
    return ScalingReport(rows, slope, intercept, r2, by_n)


# --- per-run analyses -------------------------------------------------------

@dataclass(frozen=True)
class StayHigh:
    first_all_high_iter: int | None
    # None when no sampled state ever had every frequency high
    maintained: bool | None
    positions_dropped_after_upper: int


def stay_high_analysis(result: RunResult, n: int | None = None) -> StayHigh:
    """Did every frequency stay at or above ``1 - 3/n`` once all got there?

    Runs produced by :func:`run_cga` carry exact per-iteration tracking; for
    other results the trace records are used.
    """
    if result.tracked:
        return StayHigh(result.first_all_high_iter, result.maintained_high,
                        result.positions_dropped_after_upper)
    first = next((r.iteration for r in result.trace if r.critical_pos is None), None)
    maintained = None
    if first is not None:
        maintained = all(r.critical_pos is None for r in result.trace if r.iteration >= first)
    return StayHigh(first, maintained, result.positions_dropped_after_upper)


def below_quarter_rate(results: Sequence[RunResult]) -> float:
    """Fraction of runs in which some frequency reached 1/4 or below."""
    if not results:
        raise ValueError("need at least one result")
    return sum(r.ever_below_quarter for r in results) / len(results)


@dataclass(frozen=True)
class CriticalAdvance:
    milestones: list[tuple[int, int]]  # (iteration, new running max)
    non_decreasing: bool
    final: int
    gaps: list[int]


def critical_advance_analysis(result: RunResult) -> CriticalAdvance:
    """Running maximum of the all-upper prefix and the waits between records."""
    if result.prefix_milestones:
        milestones = list(result.prefix_milestones)
    else:
        milestones, best = [], -1
        for r in result.trace:
            if r.prefix_len_at_upper > best:
                best = r.prefix_len_at_upper
                milestones.append((r.iteration, best))
    values = [v for _, v in milestones]
    gaps = [b[0] - a[0] for a, b in zip(milestones, milestones[1:])]
    return CriticalAdvance(milestones, all(a <= b for a, b in zip(values, values[1:])),
                           values[-1] if values else 0, gaps)


# --- cGA vs UMDA ------------------------------------------------------------

@dataclass
class CompareRow:
    algorithm: str
    n: int
    mu: float
    lam: int
    trials: int
    success_rate: float
    median_evals: float
    departure_fraction: float
    results: list[RunResult] = field(default_factory=list, repr=False)


def compare_cga_umda(n_grid: Iterable[int], cga_mu_rule: str | Rule = "2*n*ln2n",
                     umda_rule: str | Rule = "12*mu", trials: int = 30, seed: int = 0,
                     budget_rule: str | Rule = "24*mu*n*lnn", f: FitnessFunction = LEADINGONES,
                     workers: int = 1) -> list[CompareRow]:
    """Side-by-side cGA and UMDA runs with matched model granularity.

    The UMDA selects ``mu_sel = round(mu)`` of ``lambda = ceil(umda_rule(mu_sel))``
    samples, where ``mu`` is the cGA's well-behaved step size.  Both share
    budget and seeds, so trial ``j`` is paired across algorithms.
    """
    mu_rule, lam_rule, budget_rule = parse_rule(cga_mu_rule), parse_rule(umda_rule), parse_rule(budget_rule)
    rows = []
    for n in sorted(set(n_grid)):
        params = make_well_behaved(n, mu_rule(n))
        budget = int(budget_rule(n, params.mu))
        mu_sel = max(1, round(params.mu))
        umda = UmdaParams(n, max(mu_sel, math.ceil(round(lam_rule(n, mu_sel), 9))), mu_sel)
        cga_res = run_trials(params, f, budget, trials, seed, workers=workers)
        umda_res = _map_trials(partial(_umda_trial, params=umda, f=f, budget=budget, seed=seed,
                                       trace_every=None), trials, workers)
        for name, mu, lam, res in (("cga", params.mu, 2, cga_res), ("umda", float(mu_sel), umda.lam, umda_res)):
            hits = [r.hit_time_evals for r in res if r.success]
            rows.append(CompareRow(name, n, mu, lam, trials, len(hits) / trials,
                                   float(np.median(hits)) if hits else math.nan,
                                   float(np.mean([r.departure_fraction for r in res])), res))
    return rows
