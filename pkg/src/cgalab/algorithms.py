"""The compact GA and the UMDA, stepped from Python or run in compiled loops.

The Python step functions are the readable reference; ``run_cga`` and
``run_umda`` use the kernels in ``_kernels`` and consume the random stream in
exactly the same order, so both paths agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .benchmarks import FitnessFunction
from .core import FrequencyVector, ModelParams, random_source, sample

MAX_TRACE_RECORDS = 10_000


@dataclass
class CgaState:
    params: ModelParams
    freq: FrequencyVector
    iteration: int = 0
    evaluations: int = 0

    @classmethod
    def initial(cls, params: ModelParams) -> "CgaState":
        return cls(params, FrequencyVector.initial(params))


@dataclass
class StepOutcome:
    x1: np.ndarray
    x2: np.ndarray
    winner_first: bool
    deltas: np.ndarray  # before clamping, grid units
    clamped: frozenset[int]  # 1-based positions
    optimum_sampled: bool


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    critical_pos: int | None
    min_freq: float
    prefix_len_at_upper: int
    optimum_prob: float


@dataclass
class RunResult:
    """Outcome of one seeded run.

    ``hit_time_evals`` is the index (1-based) of the first evaluation that
    saw an optimum.  The tracked flags cover every state the algorithm
    sampled from, independent of trace thinning.
    """

    success: bool
    hit_time_evals: int | None
    iterations_used: int
    trace: list[TraceRecord]
    first_all_high_iter: int | None
    ever_below_quarter: bool
    budget: int
    mu: float
    n: int
    maintained_high: bool | None = None
    departure_fraction: float = 0.0
    positions_dropped_after_upper: int = 0
    prefix_milestones: list[tuple[int, int]] = field(default_factory=list)
    final_state: list[int] = field(default_factory=list)
    # True when the stay-high fields come from exact per-iteration tracking
    tracked: bool = False

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["trace"] = [r.__dict__ for r in self.trace]
        return d


def rank_pair(x1, x2, f: FitnessFunction):
    """Order two samples by fitness; swap only if ``x1`` is strictly worse."""
    if f.evaluate(x1) < f.evaluate(x2):
        return x2, x1
    return x1, x2


def apply_samples(state: CgaState, x1, x2, f: FitnessFunction) -> StepOutcome:
    """Rank ``x1, x2`` and apply the clamped cGA update to ``state``."""
    x1 = np.asarray(x1, dtype=np.int64)
    x2 = np.asarray(x2, dtype=np.int64)
    optimum = bool(f.is_optimum(x1) or f.is_optimum(x2))
    y1, y2 = rank_pair(x1, x2, f)
    winner_first = y1 is x1
    deltas = y1 - y2
    k = state.freq.k
    new_k = k + deltas
    out = (new_k < 0) | (new_k > state.params.upper)
    clamped = frozenset(int(i) + 1 for i in np.flatnonzero(out & (deltas != 0)))
    state.freq.k = np.where(out, k, new_k)
    state.iteration += 1
    state.evaluations += 2
    return StepOutcome(x1, x2, winner_first, deltas, clamped, optimum)


def cga_step(state: CgaState, f: FitnessFunction, rng: np.random.Generator) -> StepOutcome:
    x1 = sample(state.freq, rng)
    x2 = sample(state.freq, rng)
    return apply_samples(state, x1, x2, f)


def critical_position(p: FrequencyVector) -> int | None:
    """Smallest 1-based position with frequency below ``1 - 3/n``, or None."""
    n, m = p.params.n, p.params.m
    low = np.flatnonzero(p.k * (n - 2) < 2 * m * (n - 4))
    return int(low[0]) + 1 if low.size else None


def default_trace_every(budget_evals: int, evals_per_iter: int = 2) -> int:
    return max(1, (budget_evals // evals_per_iter) // MAX_TRACE_RECORDS)


def _kernel_id(f: FitnessFunction) -> int:
    if f.kernel_id is None:
        raise ValueError(f"benchmark {f.name!r} has no compiled kernel; step it with cga_step")
    return f.kernel_id


def _max_records(budget_evals: int, evals_per_iter: int, trace_every: int) -> int:
    iters = -(-budget_evals // evals_per_iter)
    return iters // trace_every + 3


def run_cga(params: ModelParams, f: FitnessFunction, budget_evals: int, seed: int,
            stream: int = 0, trace_every: int | None = None) -> RunResult:
    """Run the cGA until an optimum is sampled or the budget is spent."""
    if budget_evals < 0:
        raise ValueError("budget_evals must be >= 0")
    if trace_every is None:
        trace_every = default_trace_every(budget_evals)
    if trace_every < 1:
        raise ValueError("trace_every must be >= 1")
    rng = random_source(seed, stream)
    (hit, iters, k, first_high, maintained, below_q, dep_iters, n_dropped,
     ev_iter, ev_val, tr_iter, tr_crit, tr_mink, tr_prefix, tr_opt) = _kernels.cga_run(
        rng, params.n, params.m, _kernel_id(f), int(budget_evals), int(trace_every),
        _max_records(budget_evals, 2, trace_every))
    trace = [
        TraceRecord(int(t), int(c) or None, 1.0 / params.n + int(mk) / params.mu, int(pre), float(op))
        for t, c, mk, pre, op in zip(tr_iter, tr_crit, tr_mink, tr_prefix, tr_opt)
    ]
    return RunResult(
        success=hit >= 0,
        hit_time_evals=int(hit) if hit >= 0 else None,
        iterations_used=int(iters),
        trace=trace,
        first_all_high_iter=int(first_high) if first_high >= 0 else None,
        ever_below_quarter=bool(below_q),
        budget=int(budget_evals),
        mu=params.mu,
        n=params.n,
        maintained_high=bool(maintained) if first_high >= 0 else None,
        departure_fraction=dep_iters / iters if iters else 0.0,
        positions_dropped_after_upper=int(n_dropped),
        prefix_milestones=[(int(a), int(b)) for a, b in zip(ev_iter, ev_val)],
        final_state=[int(v) for v in k],
        tracked=True,
    )


# --- UMDA -------------------------------------------------------------------

@dataclass(frozen=True)
class UmdaParams:
    n: int
    lam: int
    mu_sel: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if not 1 <= self.mu_sel <= self.lam:
            raise ValueError(f"need 1 <= mu_sel <= lambda, got mu_sel={self.mu_sel}, lambda={self.lam}")


@dataclass
class UmdaState:
    """UMDA model as exact rationals, clamped to ``[1/n, 1 - 1/n]``."""

    params: UmdaParams
    freq: list[Fraction]
    iteration: int = 0
    evaluations: int = 0

    @classmethod
    def initial(cls, params: UmdaParams) -> "UmdaState":
        return cls(params, [Fraction(1, 2)] * params.n)

    def values(self) -> np.ndarray:
        return np.array([float(q) for q in self.freq])


def _clamp(q: Fraction, n: int) -> Fraction:
    return min(max(q, Fraction(1, n)), Fraction(n - 1, n))


def umda_select(samples: Sequence[Sequence[int]], f: FitnessFunction, mu_sel: int) -> list[int]:
    """Indices of the ``mu_sel`` best samples; ties keep sample order."""
    fits = [f.evaluate(x) for x in samples]
    order = sorted(range(len(samples)), key=lambda j: -fits[j])
    return order[:mu_sel]


def umda_update(state: UmdaState, samples, f: FitnessFunction) -> list[int]:
    """Set the model from the selected samples; returns the selected indices."""
    P = state.params
    samples = np.asarray(samples, dtype=np.int64)
    if samples.shape != (P.lam, P.n):
        raise ValueError(f"expected {P.lam} samples of length {P.n}")
    chosen = umda_select(samples, f, P.mu_sel)
    counts = samples[chosen].sum(axis=0)
    state.freq = [_clamp(Fraction(int(c), P.mu_sel), P.n) for c in counts]
    state.iteration += 1
    state.evaluations += P.lam
    return chosen


def umda_step(state: UmdaState, f: FitnessFunction, rng: np.random.Generator) -> UmdaState:
    P = state.params
    p = state.values()
    samples = (rng.random((P.lam, P.n)) < p).astype(np.int64)
    umda_update(state, samples, f)
    return state


def run_umda(params: UmdaParams, f: FitnessFunction, budget_evals: int, seed: int,
             stream: int = 0, trace_every: int | None = None) -> RunResult:
    """UMDA counterpart of :func:`run_cga`.

    ``mu`` in the result is ``mu_sel``; the stay-high fields stay unset.
    """
    if budget_evals < 0:
        raise ValueError("budget_evals must be >= 0")
    if trace_every is None:
        trace_every = default_trace_every(budget_evals, params.lam)
    rng = random_source(seed, stream)
    (hit, iters, c, below_q, dep_iters,
     tr_iter, tr_crit, tr_minp, tr_prefix, tr_opt) = _kernels.umda_run(
        rng, params.n, params.lam, params.mu_sel, _kernel_id(f), int(budget_evals),
        int(trace_every), _max_records(budget_evals, params.lam, trace_every))
    trace = [
        TraceRecord(int(t), int(cr) or None, float(mp), int(pre), float(op))
        for t, cr, mp, pre, op in zip(tr_iter, tr_crit, tr_minp, tr_prefix, tr_opt)
    ]
    return RunResult(
        success=hit >= 0,
        hit_time_evals=int(hit) if hit >= 0 else None,
        iterations_used=int(iters),
        trace=trace,
        first_all_high_iter=None,
        ever_below_quarter=bool(below_q),
        budget=int(budget_evals),
        mu=float(params.mu_sel),
        n=params.n,
        departure_fraction=dep_iters / iters if iters else 0.0,
        final_state=[int(v) for v in c],
    )


def optimum_prob(p) -> float:
    """Probability that one sample from ``p`` is the all-ones string."""
    values = p.values() if hasattr(p, "values") else np.asarray(p, dtype=float)
    return float(math.prod(values))
