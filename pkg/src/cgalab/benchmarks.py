"""Pseudo-Boolean benchmarks, registered by name."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# ids understood by the compiled kernels in ``_kernels``
KERNEL_LEADINGONES = 0
KERNEL_ONEMAX = 1


def leading_ones(x: Sequence[int]) -> int:
    """Length of the longest all-ones prefix of ``x``."""
    count = 0
    for bit in x:
        if not bit:
            break
        count += 1
    return count


def one_max(x: Sequence[int]) -> int:
    """Number of ones in ``x``."""
    return int(np.count_nonzero(np.asarray(x)))


def _all_ones(x: Sequence[int]) -> bool:
    return bool(np.all(np.asarray(x) == 1))


@dataclass(frozen=True)
class FitnessFunction:
    """A fitness function plus the metadata drift arguments rely on.

    ``weakly_prefers_ones`` asserts that turning any single 0 into a 1 never
    lowers the fitness.  ``kernel_id`` selects the compiled fast path; custom
    functions without one can still be stepped from Python.
    """

    name: str
    evaluate: Callable[[Sequence[int]], int]
    is_optimum: Callable[[Sequence[int]], bool]
    weakly_prefers_ones: bool
    kernel_id: int | None = None

    def __call__(self, x: Sequence[int]) -> int:
        return self.evaluate(x)


LEADINGONES = FitnessFunction("leadingones", leading_ones, _all_ones, True, KERNEL_LEADINGONES)
ONEMAX = FitnessFunction("onemax", one_max, _all_ones, True, KERNEL_ONEMAX)

_REGISTRY: dict[str, FitnessFunction] = {}


def register(f: FitnessFunction) -> None:
    if f.name in _REGISTRY:
        raise ValueError(f"benchmark {f.name!r} already registered")
    _REGISTRY[f.name] = f


def get_benchmark(name: str) -> FitnessFunction:
    try:
        return _REGISTRY[name.lower()]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown benchmark {name!r} (known: {known})") from None


def available() -> list[str]:
    return sorted(_REGISTRY)


register(LEADINGONES)
register(ONEMAX)
