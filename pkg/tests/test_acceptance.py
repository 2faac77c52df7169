"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed together in the terminal
summary.  Criteria 7 to 9 share one seeded run grid.
"""
import math
import time

import numpy as np
import pytest

from cgalab.benchmarks import LEADINGONES
from cgalab.core import FrequencyVector, ModelParams, make_well_behaved
from cgalab.drift import check_genetic_drift_on_cga, check_mult_drift, check_neg_drift
from cgalab.experiments import (compare_cga_umda, scaling_experiment, stay_high_analysis)
from cgalab.oracle import (empirical_step_distribution, exact_expected_delta, exact_step_distribution,
                           conditional_drift_formula, expected_change_formula, oracle_conditional_drift,
                           total_variation)

pytestmark = pytest.mark.acceptance

GRID = [8, 16, 32, 64]
GRID_SEED = 2026


def _random_interior_vectors(n, count, rng):
    for _ in range(count):
        m = int(rng.integers(2, 200))
        yield FrequencyVector(ModelParams(n, m), rng.integers(1, 2 * m, size=n))


def _sweep(error_fn):
    rng = np.random.default_rng(12345)
    worst = 0.0
    for n in range(3, 8):
        for p in _random_interior_vectors(n, 100, rng):
            dist = exact_step_distribution(p, LEADINGONES)
            q = [float(v) for v in p.fractions()]
            for i in range(1, n + 1):
                worst = max(worst, error_fn(dist, q, p.params.mu, i))
    return worst


def test_c01_expected_change_matches_closed_form(report_line):
    start = time.perf_counter()
    worst = _sweep(lambda d, q, mu, i: abs(exact_expected_delta(d, i) - expected_change_formula(q, i - 1, mu)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30
    report_line("C1 expected change = formula", ok, f"max err {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_c02_conditional_drift_matches_closed_form(report_line):
    start = time.perf_counter()
    worst = _sweep(lambda d, q, mu, i: abs(oracle_conditional_drift(d, i)
                                           - conditional_drift_formula(q, i, mu)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30
    report_line("C2 conditional drift = formula", ok, f"max err {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_c03_sampler_matches_enumeration(report_line):
    # upper border, interior, one step above the lower border, lower border
    p = FrequencyVector(ModelParams(5, 20), [40, 38, 30, 2, 0])
    start = time.perf_counter()
    dist = exact_step_distribution(p, LEADINGONES)
    emp = empirical_step_distribution(p, LEADINGONES, 1_000_000, seed=1)
    tv = total_variation(dist, emp)
    elapsed = time.perf_counter() - start
    ok = tv <= 0.005 and elapsed < 60
    report_line("C3 sampler vs enumeration (TV)", ok, f"TV {tv:.5f} <= 0.005, {elapsed:.1f}s")
    assert ok


def test_c04_genetic_drift(report_line):
    params = make_well_behaved(20, 500)
    start = time.perf_counter()
    rep = check_genetic_drift_on_cga(params, 20, 0.25, 2000, 1000, seed=1)
    elapsed = time.perf_counter() - start
    ok = (rep.bound_value == pytest.approx(2 * math.exp(-3.90625)) and not rep.vacuous
          and rep.passed and elapsed < 120)
    report_line("C4 genetic drift", ok,
                f"rate {rep.empirical_rate:.4f}, Wilson lower {rep.wilson_lower:.5f} <= bound "
                f"{rep.bound_value:.5f}, {elapsed:.1f}s")
    assert ok


def test_c05_multiplicative_drift(report_line):
    start = time.perf_counter()
    reps = [check_mult_drift(0.1, r, 100_000, seed=1) for r in (1, 2, 3)]
    elapsed = time.perf_counter() - start
    closed_form = 0.9 ** 30 <= math.exp(-3)
    ok = all(rep.passed for rep in reps) and closed_form and elapsed < 30
    detail = ", ".join(f"r={rep.params['r']}: {rep.empirical_rate:.4f} vs {rep.bound_value:.4f}"
                       for rep in reps)
    report_line("C5 multiplicative drift", ok, f"{detail}; 0.9^30={0.9 ** 30:.4f}, {elapsed:.1f}s")
    assert ok


NEG_GRID = [  # (eps, step, b, horizon)
    (-0.5, 1.0, 60, 1000),
    (-0.6, 1.0, 50, 1000),
    (-0.3, 1.0, 100, 500),
    (-0.2, 0.5, 40, 1000),
]


def test_c06_negative_drift(report_line):
    start = time.perf_counter()
    reps = [check_neg_drift(*args, trials=10_000, seed=1) for args in NEG_GRID]
    elapsed = time.perf_counter() - start
    ok = all(not rep.vacuous and rep.passed for rep in reps) and elapsed < 60
    detail = ", ".join(f"{rep.failures}/{rep.trials} vs {rep.bound_value:.3g}" for rep in reps)
    report_line("C6 negative drift", ok, f"{detail}, {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def grid_report():
    return scaling_experiment(GRID, "2*n*ln2n", "24*mu*n*lnn", trials=30, seed=GRID_SEED)


def test_c07_success_and_no_quarter_drop(grid_report, report_line):
    success_ok = all(r.success_rate >= 0.9 for r in grid_report.rows)
    quarter_ok = all(r.below_quarter_rate <= 0.1 for r in grid_report.rows)
    detail = "; ".join(f"n={r.n}: success {r.success_rate:.2f}, below 1/4 {r.below_quarter_rate:.2f}"
                       for r in grid_report.rows)
    report_line("C7 success and no drop to 1/4", success_ok and quarter_ok, detail)
    assert success_ok, "success rate below 0.9"
    assert quarter_ok, "ever_below_quarter rate above 0.1"


def test_c08_scaling_slope(grid_report, report_line):
    slope, r2 = grid_report.slope, grid_report.r_squared
    ok = slope is not None and 1.7 <= slope <= 2.9 and r2 >= 0.95
    medians = ", ".join(f"{r.n}:{r.median_evals:g}" for r in grid_report.rows)
    report_line("C8 scaling slope in [1.7, 2.9]", ok, f"slope {slope:.3f}, r2 {r2:.3f}; medians {medians}")
    assert ok


def test_c09_stay_high(grid_report, report_line):
    runs = [r for results in grid_report.results.values() for r in results if r.success]
    analyses = [stay_high_analysis(r) for r in runs]
    measured = [a for a in analyses if a.maintained is not None]
    no_drop = sum(a.positions_dropped_after_upper == 0 for a in analyses)
    rate = sum(a.maintained for a in measured) / len(measured) if measured else math.nan
    ok = bool(measured) and rate >= 0.9
    report_line("C9 stay high once all high", ok,
                f"{len(measured)}/{len(runs)} successful runs ever had all frequencies high, "
                f"maintained rate {rate:.2f}; no position fell below 1-3/n after reaching "
                f"the upper border in {no_drop}/{len(runs)} runs")
    assert measured, "no successful run reached all frequencies >= 1 - 3/n before the optimum"
    assert rate >= 0.9


def test_c10_cga_leaves_upper_border_more_than_umda(report_line):
    cga, umda = compare_cga_umda([32], trials=30, seed=GRID_SEED)
    ok = cga.departure_fraction > umda.departure_fraction
    report_line("C10 cGA departs more than UMDA", ok,
                f"cGA {cga.departure_fraction:.3f} > UMDA {umda.departure_fraction:.3f} "
                f"(success {cga.success_rate:.2f} / {umda.success_rate:.2f})")
    assert ok
