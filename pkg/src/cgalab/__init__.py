"""Univariate EDA laboratory: the compact GA and the UMDA on LeadingOnes and
OneMax, an exact one-step oracle, drift-bound checks and seeded experiments."""
from .algorithms import (CgaState, RunResult, StepOutcome, TraceRecord, UmdaParams, UmdaState,
                         apply_samples, cga_step, critical_position, rank_pair, run_cga, run_umda,
                         umda_step, umda_update)
from .benchmarks import LEADINGONES, ONEMAX, FitnessFunction, get_benchmark, leading_ones, one_max
from .core import (FrequencyVector, ModelParams, freq_fraction, freq_value, make_well_behaved,
                   random_source, sample)

__version__ = "0.1.0"
