"""Exact one-step transition law of the cGA by enumerating every sample pair.

For ``n`` positions there are ``4**n`` ordered pairs, so the enumeration is
limited to ``n <= 10``.  Pair weights are float64 products of the exact grid
frequencies and each delta vector's mass is accumulated with ``math.fsum``
(exactly rounded).  ``exact=True`` switches to ``Fraction`` arithmetic for
``n <= 5``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .algorithms import _kernel_id
from .benchmarks import FitnessFunction
from .core import FrequencyVector, random_source

MAX_N = 10
MAX_N_EXACT = 5


@dataclass(frozen=True)
class StepDistribution:
    """Probability of every clamped delta vector (grid units) after one step."""

    entries: dict[tuple[int, ...], float | Fraction]
    n: int
    k: tuple[int, ...]
    mu: Fraction

    def total(self):
        if self.entries and isinstance(next(iter(self.entries.values())), Fraction):
            return sum(self.entries.values(), Fraction(0))
        return math.fsum(self.entries.values())

    def change_probability(self, i: int):
        """Probability that position ``i`` (1-based) moves."""
        return _sum(prob for d, prob in self.entries.items() if d[i - 1] != 0)


def _sum(values):
    values = list(values)
    if values and isinstance(values[0], Fraction):
        return sum(values, Fraction(0))
    return math.fsum(values)


def _all_strings(n: int) -> np.ndarray:
    return ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.int64)


def _pair_deltas(p: FrequencyVector, f: FitnessFunction):
    """Clamped delta vector for every ordered pair, shape ``(2**n, 2**n, n)``."""
    n = p.n
    X = _all_strings(n)
    fit = np.array([f.evaluate(x) for x in X])
    swap = fit[:, None] < fit[None, :]
    diff = X[:, None, :] - X[None, :, :]
    delta = np.where(swap[:, :, None], -diff, diff)
    new_k = p.k + delta
    delta[(new_k < 0) | (new_k > p.params.upper)] = 0
    return X, delta


def encode(delta: Sequence[int]) -> int:
    """Base-3 code of a delta vector, position 1 least significant."""
    return int(sum((d + 1) * 3 ** i for i, d in enumerate(delta)))


def decode(code: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        code, r = divmod(code, 3)
        out.append(r - 1)
    return tuple(out)


def exact_step_distribution(p: FrequencyVector, f: FitnessFunction,
                            exact: bool = False) -> StepDistribution:
    n = p.n
    if n > MAX_N:
        raise ValueError(f"enumeration needs n <= {MAX_N} (4**n pairs), got n={n}")
    if exact and n > MAX_N_EXACT:
        raise ValueError(f"exact rational mode needs n <= {MAX_N_EXACT}, got n={n}")
    X, delta = _pair_deltas(p, f)
    codes = ((delta + 1) * 3 ** np.arange(n)).sum(axis=2).ravel()
    fracs = p.fractions()

    if exact:
        w = [math.prod(q if b else 1 - q for q, b in zip(fracs, x)) for x in X]
        acc: dict[int, Fraction] = {}
        for idx, code in enumerate(codes.tolist()):
            a, b = divmod(idx, len(w))
            acc[code] = acc.get(code, Fraction(0)) + w[a] * w[b]
        entries = {decode(c, n): v for c, v in acc.items()}
    else:
        q = np.array([float(v) for v in fracs])
        w = np.prod(np.where(X == 1, q, 1.0 - q), axis=1)
        pair_w = np.outer(w, w).ravel()
        order = np.argsort(codes, kind="stable")
        codes_sorted = codes[order]
        weights_sorted = pair_w[order]
        cuts = np.flatnonzero(np.diff(codes_sorted)) + 1
        entries = {}
        for code, chunk in zip(codes_sorted[np.r_[0, cuts]], np.split(weights_sorted, cuts)):
            entries[decode(int(code), n)] = math.fsum(chunk.tolist())
    return StepDistribution(entries, n, tuple(int(v) for v in p.k), p.params.mu_exact)


def exact_expected_delta(dist: StepDistribution, i: int):
    """Expected change of frequency ``i`` (1-based), in frequency units."""
    if not 1 <= i <= dist.n:
        raise ValueError(f"position {i} outside [1, {dist.n}]")
    exact = dist.entries and isinstance(next(iter(dist.entries.values())), Fraction)
    mu = dist.mu if exact else float(dist.mu)
    return _sum(prob * d[i - 1] for d, prob in dist.entries.items() if d[i - 1]) / mu


def oracle_conditional_drift(dist: StepDistribution, i: int):
    """Expected change of frequency ``i`` given that it moves."""
    moved = dist.change_probability(i)
    if moved == 0:
        raise ValueError(f"position {i} never moves from this state")
    return exact_expected_delta(dist, i) / moved


def _values(p):
    if isinstance(p, FrequencyVector):
        return p.fractions()
    return list(p)


def expected_change_formula(p, i: int, mu):
    """Closed-form expected change of frequency ``i + 1`` on LeadingOnes.

    ``(2/mu) * prod_{j<=i} p_j**2 * p_{i+1} * (1 - p_{i+1})``, valid while
    frequency ``i + 1`` is at least one grid step inside the borders.
    """
    q = _values(p)
    if not 0 <= i <= len(q) - 1:
        raise ValueError(f"i must lie in [0, {len(q) - 1}]")
    prefix = math.prod(v * v for v in q[:i])
    return 2 / mu * prefix * q[i] * (1 - q[i])


def conditional_drift_formula(p, i: int, mu):
    """Expected signed change of frequency ``i`` given it moves: ``(1/mu) prod_{j<i} p_j**2``."""
    q = _values(p)
    if not 1 <= i <= len(q):
        raise ValueError(f"i must lie in [1, {len(q)}]")
    return 1 / mu * math.prod(v * v for v in q[:i - 1])


def empirical_step_distribution(p: FrequencyVector, f: FitnessFunction, steps: int,
                                seed: int, stream: int = 0) -> dict[tuple[int, ...], float]:
    """Relative frequencies of delta vectors over ``steps`` independent single
    steps, all started from ``p``."""
    rng = random_source(seed, stream)
    counts = _kernels.cga_delta_counts(rng, p.k.copy(), p.n, p.params.m, _kernel_id(f), int(steps))
    return {decode(int(c), p.n): counts[c] / steps for c in np.flatnonzero(counts)}


def total_variation(dist: StepDistribution, empirical: dict[tuple[int, ...], float]) -> float:
    keys = set(dist.entries) | set(empirical)
    return 0.5 * math.fsum(abs(float(dist.entries.get(d, 0.0)) - empirical.get(d, 0.0)) for d in keys)


def to_json_entries(dist: StepDistribution) -> list[dict]:
    """Sorted ``{"delta": [...], "prob": float}`` rows."""
    return [{"delta": list(d), "prob": float(v)} for d, v in sorted(dist.entries.items())]
