"""Tail bounds from drift analysis and Monte Carlo checks against them.

Each bound is evaluated, capped at 1, and compared with an empirical failure
rate through a one-sided Wilson interval.  A bound of 1 is vacuous: the check
passes trivially and the report says so.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from . import _kernels
from .algorithms import _kernel_id
from .benchmarks import FitnessFunction, LEADINGONES
from .core import ModelParams, random_source

CONFIDENCE = 0.99


@dataclass(frozen=True)
class MultiplicativeDriftBound:
    delta: float
    x0: float
    s_min: float
    r: float

    def __post_init__(self):
        if not (self.delta > 0 and self.x0 >= self.s_min > 0 and self.r >= 0):
            raise ValueError(f"invalid multiplicative drift parameters: {self}")


@dataclass(frozen=True)
class NegativeDriftBound:
    b: float
    c: float
    eps: float
    t: int

    def __post_init__(self):
        if not (self.b > 0 and 0 < self.c < self.b and self.eps < 0 and self.t >= 0):
            raise ValueError(f"invalid negative drift parameters: {self}")


@dataclass(frozen=True)
class GeneticDriftBound:
    gamma: float
    mu: float
    T: int
    position: int = 1

    def __post_init__(self):
        if not (self.gamma > 0 and self.T >= 1 and self.mu > 0):
            raise ValueError(f"invalid genetic drift parameters: {self}")


def mult_drift_tail(bound: MultiplicativeDriftBound) -> tuple[int, float]:
    """Time threshold and the probability of exceeding it.

    The threshold is ``ceil((r + ln(x0/s_min)) / delta)``; the quotient is
    rounded to 9 decimals first so that 3/0.1 lands on 30, not 31.
    """
    q = (bound.r + math.log(bound.x0 / bound.s_min)) / bound.delta
    return math.ceil(round(q, 9)), math.exp(-bound.r)


def neg_drift_tail(bound: NegativeDriftBound) -> float:
    """``min(1, t^2 exp(-b|eps| / (2 c^2)))``."""
    return min(1.0, bound.t ** 2 * math.exp(-bound.b * abs(bound.eps) / (2 * bound.c ** 2)))


def genetic_drift_tail(bound: GeneticDriftBound) -> float:
    """``min(1, 2 exp(-gamma^2 mu^2 / (2T)))``: chance the frequency ever
    drops to ``1/2 - gamma`` or lower within ``T`` iterations."""
    return min(1.0, 2 * math.exp(-bound.gamma ** 2 * bound.mu ** 2 / (2 * bound.T)))


def wilson_interval(failures: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """One-sided Wilson bounds: each side holds with probability ``confidence``."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = NormalDist().inv_cdf(confidence)
    phat = failures / trials
    denom = 1 + z * z / trials
    centre = phat + z * z / (2 * trials)
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, (centre - half) / denom), min(1.0, (centre + half) / denom)


@dataclass
class CheckReport:
    theorem: str
    params: dict
    bound_value: float
    failures: int
    trials: int
    wilson_lower: float = field(init=False)
    wilson_upper: float = field(init=False)

    def __post_init__(self):
        self.bound_value = min(1.0, self.bound_value)
        self.wilson_lower, self.wilson_upper = wilson_interval(self.failures, self.trials)

    @property
    def empirical_rate(self) -> float:
        return self.failures / self.trials

    @property
    def vacuous(self) -> bool:
        return self.bound_value >= 1.0

    @property
    def underpowered(self) -> bool:
        """The data cannot confirm the bound either way."""
        return not self.vacuous and self.wilson_lower <= self.bound_value < self.wilson_upper

    @property
    def passed(self) -> bool:
        return self.wilson_lower <= self.bound_value


# --- synthetic processes ----------------------------------------------------

def synthetic_mult_process(delta: float, x0: float, rng: np.random.Generator) -> int:
    """Hitting time of 0 for ``X -> 0`` w.p. ``delta``, else ``X`` unchanged.

    The drift is exactly ``delta * X``; the hitting time is geometric.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if x0 == 0:
        return 0
    t = 0
    while True:
        t += 1
        if rng.random() < delta:
            return t


def mult_hitting_times(delta: float, x0: float, trials: int, seed: int) -> np.ndarray:
    """Hitting times of ``trials`` independent copies, simulated side by side
    on one stream (one draw per still-running copy per time step)."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    times = np.zeros(trials, dtype=np.int64)
    if x0 == 0:
        return times
    rng = random_source(seed, 0)
    alive = np.arange(trials)
    t = 0
    while alive.size:
        t += 1
        done = rng.random(alive.size) < delta
        times[alive[done]] = t
        alive = alive[~done]
    return times


def _lattice_target(b: float, step: float) -> int:
    return math.ceil(round(b / step, 9))


def synthetic_neg_walk(eps: float, step: float, b: float, horizon: int,
                       rng: np.random.Generator) -> bool:
    """Whether a walk with drift ``eps < 0`` reaches ``b`` within ``horizon`` steps.

    From ``X >= 0`` the walk moves ``+step`` with probability
    ``(1 + eps/step)/2`` and ``-step`` otherwise; from ``X < 0`` it returns
    to 0.  Positions are kept in integer units of ``step``.
    """
    if step <= 0 or abs(eps) > step:
        raise ValueError("need step > 0 and |eps| <= step")
    if b <= 0:
        raise ValueError("target b must be positive")
    up = (1 + eps / step) / 2
    target = _lattice_target(b, step)
    pos = 0
    for _ in range(horizon):
        if pos < 0:
            pos = 0
        else:
            pos += 1 if rng.random() < up else -1
        if pos >= target:
            return True
    return False


def neg_walk_hits(eps: float, step: float, b: float, horizon: int, trials: int, seed: int) -> np.ndarray:
    """Vectorised :func:`synthetic_neg_walk` over ``trials`` walks sharing one stream.

    Each time step draws one double per trial, including walks that are
    currently resetting, so the stream layout does not depend on the path.
    """
    if step <= 0 or abs(eps) > step:
        raise ValueError("need step > 0 and |eps| <= step")
    if b <= 0:
        raise ValueError("target b must be positive")
    rng = random_source(seed, 0)
    up = (1 + eps / step) / 2
    target = _lattice_target(b, step)
    pos = np.zeros(trials, dtype=np.int64)
    hit = np.zeros(trials, dtype=bool)
    for _ in range(horizon):
        move = np.where(rng.random(trials) < up, 1, -1)
        pos = np.where(pos < 0, 0, pos + move)
        hit |= pos >= target
    return hit


# --- checks -----------------------------------------------------------------

def check_mult_drift(delta: float, r: float, trials: int, seed: int,
                     x0: float = 1.0, s_min: float = 1.0) -> CheckReport:
    bound = MultiplicativeDriftBound(delta, x0, s_min, r)
    threshold, prob = mult_drift_tail(bound)
    times = mult_hitting_times(delta, x0, trials, seed)
    return CheckReport("mult", {"delta": delta, "x0": x0, "s_min": s_min, "r": r,
                                "threshold": threshold},
                       prob, int(np.count_nonzero(times > threshold)), trials)


def check_neg_drift(eps: float, step: float, b: float, horizon: int, trials: int,
                    seed: int, c: float | None = None) -> CheckReport:
    """Empirical hit rate of the reflected walk against the negative-drift bound.

    Steps never exceed ``step``, so any ``c > step`` is admissible; the
    default ``c = step`` is the limit of those bounds.
    """
    c = step if c is None else c
    bound = NegativeDriftBound(b, c, eps, horizon)
    hits = neg_walk_hits(eps, step, b, horizon, trials, seed)
    return CheckReport("neg", {"eps": eps, "step": step, "c": c, "b": b, "t": horizon},
                       neg_drift_tail(bound), int(hits.sum()), trials)


def _threshold_index(params: ModelParams, gamma: float) -> int:
    """Largest grid index whose frequency is ``<= 1/2 - gamma`` (may be negative)."""
    limit = (Fraction(1, 2) - Fraction(gamma) - Fraction(1, params.n)) * params.mu_exact
    return math.floor(limit)


def check_genetic_drift_on_cga(params: ModelParams, position: int, gamma: float, T: int,
                               trials: int, seed: int,
                               f: FitnessFunction = LEADINGONES) -> CheckReport:
    """Fraction of ``T``-iteration cGA runs in which frequency ``position``
    (1-based) ever reaches ``1/2 - gamma`` or below."""
    if not f.weakly_prefers_ones:
        raise ValueError(f"benchmark {f.name!r} does not weakly prefer ones")
    if not 1 <= position <= params.n:
        raise ValueError(f"position must lie in [1, {params.n}]")
    bound = GeneticDriftBound(gamma, params.mu, T, position)
    k_thr = _threshold_index(params, gamma)
    fid = _kernel_id(f)
    failures = 0
    if k_thr >= 0:
        for j in range(trials):
            lowest = _kernels.cga_min_at(random_source(seed, j), params.n, params.m, fid, T, position - 1)
            failures += lowest <= k_thr
    return CheckReport("genetic", {"n": params.n, "mu": params.mu, "position": position,
                                   "gamma": gamma, "T": T},
                       genetic_drift_tail(bound), failures, trials)
