"""Model state shared by every algorithm in the package.

Frequencies of the compact GA live on an exact grid.  With problem size ``n``
and grid half-range ``m`` the hypothetical population size is
``mu = m / (1/2 - 1/n)`` and a grid index ``k`` in ``[0, 2m]`` encodes the
frequency ``1/n + k/mu``.  Index ``m`` is 1/2, index ``0`` and ``2m`` are the
borders ``1/n`` and ``1 - 1/n``.  Nothing stores frequencies as floats; floats
are only produced on demand for sampling.

Random numbers come from numpy's PCG64 (128-bit state) seeded through
``SeedSequence(seed, spawn_key=(stream,))``.  Bit sampling draws one double
per position, in position order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

_U64 = 1 << 64


@dataclass(frozen=True)
class ModelParams:
    """Problem size and well-behaved step size of a cGA model.

    ``mu`` is derived from ``n`` and ``m`` so the well-behaved property holds
    by construction.  ``target_mu`` is what the caller asked for.
    """

    n: int
    m: int
    target_mu: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")

    @property
    def mu_exact(self) -> Fraction:
        return Fraction(2 * self.n * self.m, self.n - 2)

    @property
    def mu(self) -> float:
        return 2.0 * self.n * self.m / (self.n - 2)

    @property
    def grid_size(self) -> int:
        return 2 * self.m + 1

    @property
    def upper(self) -> int:
        """Grid index of the upper border ``1 - 1/n``."""
        return 2 * self.m

    @property
    def adjustment(self) -> float:
        """Relative change ``|mu - target_mu| / target_mu`` made by snapping."""
        if self.target_mu is None:
            return 0.0
        return abs(self.mu - self.target_mu) / self.target_mu


def make_well_behaved(n: int, target_mu: float) -> ModelParams:
    """Snap ``target_mu`` to the nearest well-behaved step size.

    ``m = round_half_up(target_mu * (1/2 - 1/n))``, at least 1.

    >>> make_well_behaved(4, 50).mu
    52.0
    """
    if n < 3:
        raise ValueError(f"n must be >= 3 (border interval degenerates), got {n}")
    if not target_mu > 0:
        raise ValueError(f"target_mu must be positive, got {target_mu}")
    # exact product so 12.5 really rounds up
    half_range = Fraction(n - 2, 2 * n)
    m = math.floor(Fraction(target_mu) * half_range + Fraction(1, 2))
    return ModelParams(n=n, m=max(1, m), target_mu=float(target_mu))


def freq_value(params: ModelParams, k: int) -> float:
    return float(freq_fraction(params, k))


def freq_fraction(params: ModelParams, k: int) -> Fraction:
    """Exact frequency encoded by grid index ``k``."""
    if not 0 <= k <= params.upper:
        raise ValueError(f"grid index {k} outside [0, {params.upper}]")
    n, m = params.n, params.m
    return Fraction(2 * m + k * (n - 2), 2 * n * m)


class FrequencyVector:
    """The cGA model: one grid index per position.

    Mutable, owned by a single run.
    """

    __slots__ = ("params", "k")

    def __init__(self, params: ModelParams, k: Sequence[int] | np.ndarray):
        k = np.array(k, dtype=np.int64)
        if k.shape != (params.n,):
            raise ValueError(f"expected {params.n} grid indices, got shape {k.shape}")
        if k.min() < 0 or k.max() > params.upper:
            raise ValueError(f"grid indices must lie in [0, {params.upper}]")
        self.params = params
        self.k = k

    @classmethod
    def initial(cls, params: ModelParams) -> "FrequencyVector":
        return cls(params, np.full(params.n, params.m, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.params.n

    def values(self) -> np.ndarray:
        return 1.0 / self.params.n + self.k / self.params.mu

    def fractions(self) -> list[Fraction]:
        return [freq_fraction(self.params, int(k)) for k in self.k]

    def copy(self) -> "FrequencyVector":
        return FrequencyVector(self.params, self.k.copy())

    def __eq__(self, other):
        if not isinstance(other, FrequencyVector):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.k, other.k)

    def __repr__(self):
        return f"FrequencyVector(n={self.n}, mu={self.params.mu:g}, k={self.k.tolist()})"


def random_source(seed: int, stream: int = 0) -> np.random.Generator:
    """Seeded PCG64 generator for one trial.

    Equal ``(seed, stream)`` pairs give identical sequences; distinct streams
    are independent (SeedSequence spawn keys).
    """
    for name, value in (("seed", seed), ("stream", stream)):
        if not 0 <= int(value) < _U64:
            raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def sample(p: FrequencyVector, rng: np.random.Generator) -> np.ndarray:
    """Draw one bit string from the product distribution of ``p``.

    Consumes exactly ``n`` doubles, position 1 first; bit ``i`` is 1 iff the
    ``i``-th draw is below ``p_i``.
    """
    u = rng.random(p.n)
    return (u < p.values()).astype(np.uint8)
