from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgalab.core import (FrequencyVector, ModelParams, freq_fraction, freq_value,
                         make_well_behaved, random_source, sample)


@pytest.mark.parametrize("n, target, m, mu", [
    (10, 1000, 400, 1000.0),
    (8, 100, 38, 101 + 1 / 3),
    (4, 50, 13, 52.0),
])
def test_make_well_behaved_examples(n, target, m, mu):
    params = make_well_behaved(n, target)
    assert params.m == m
    assert params.mu == pytest.approx(mu, rel=1e-15)


def test_make_well_behaved_rounds_half_up():
    # 50 * (1/2 - 1/4) = 12.5 exactly
    assert make_well_behaved(4, 50).m == 13


@pytest.mark.parametrize("n", [0, 1, 2])
def test_small_n_rejected(n):
    with pytest.raises(ValueError):
        make_well_behaved(n, 10)
    with pytest.raises(ValueError):
        ModelParams(n, 1)


def test_nonpositive_target_rejected():
    with pytest.raises(ValueError):
        make_well_behaved(8, 0)


def test_tiny_target_snaps_to_one_grid_step():
    params = make_well_behaved(8, 0.1)
    assert params.m == 1
    assert params.adjustment > 1


@given(n=st.integers(3, 500), target=st.floats(1.0, 1e6))
def test_well_behaved_grid_hits_half_and_borders(n, target):
    params = make_well_behaved(n, target)
    assert freq_fraction(params, 0) == Fraction(1, n)
    assert freq_fraction(params, params.m) == Fraction(1, 2)
    assert freq_fraction(params, params.upper) == Fraction(n - 1, n)
    # grid step is exactly 1/mu
    assert freq_fraction(params, 1) - freq_fraction(params, 0) == 1 / params.mu_exact
    if params.m > 1:
        assert params.adjustment <= 1 / (target * (0.5 - 1 / n))


def test_freq_value_examples():
    params = ModelParams(3, 2)
    assert params.mu == 12.0
    assert freq_fraction(params, 2) == Fraction(1, 2)
    assert freq_fraction(params, 4) == Fraction(2, 3)
    assert freq_fraction(params, 1) == Fraction(5, 12)
    assert freq_value(params, 1) == 5 / 12


@pytest.mark.parametrize("k", [-1, 5])
def test_freq_index_out_of_range(k):
    with pytest.raises(ValueError):
        freq_fraction(ModelParams(3, 2), k)


def test_frequency_vector_validation():
    params = ModelParams(3, 2)
    with pytest.raises(ValueError):
        FrequencyVector(params, [0, 1])
    with pytest.raises(ValueError):
        FrequencyVector(params, [0, 1, 5])
    fv = FrequencyVector.initial(params)
    assert fv.fractions() == [Fraction(1, 2)] * 3
    clone = fv.copy()
    clone.k[0] = 0
    assert fv != clone and fv.k[0] == 2


@given(n=st.integers(3, 40), m=st.integers(1, 200), data=st.data())
def test_float_values_match_exact_grid(n, m, data):
    params = ModelParams(n, m)
    k = data.draw(st.lists(st.integers(0, 2 * m), min_size=n, max_size=n))
    fv = FrequencyVector(params, k)
    exact = np.array([float(q) for q in fv.fractions()])
    assert np.allclose(fv.values(), exact, rtol=0, atol=1e-15)
    assert np.all(fv.values() >= 1 / n - 1e-15) and np.all(fv.values() <= 1 - 1 / n + 1e-15)


def test_random_source_reproducible_and_streams_differ():
    a = random_source(7, 3).random(5)
    b = random_source(7, 3).random(5)
    c = random_source(7, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("seed, stream", [(-1, 0), (0, -1), (2 ** 64, 0)])
def test_random_source_rejects_bad_seeds(seed, stream):
    with pytest.raises(ValueError):
        random_source(seed, stream)


def test_sample_regression():
    fv = FrequencyVector.initial(ModelParams(8, 3))
    rng = random_source(1, 0)
    assert sample(fv, rng).tolist() == [0, 1, 0, 1, 1, 0, 1, 0]
    assert sample(fv, rng).tolist() == [1, 1, 1, 1, 0, 1, 1, 1]


def test_sample_consumes_one_double_per_position():
    fv = FrequencyVector(ModelParams(5, 4), [0, 2, 4, 6, 8])
    rng, ref = random_source(3), random_source(3)
    x = sample(fv, rng)
    u = ref.random(5)
    assert x.tolist() == (u < fv.values()).astype(int).tolist()
    assert rng.random() == ref.random()


def test_sample_marginals_within_four_sigma():
    params = ModelParams(6, 4)
    fv = FrequencyVector(params, [0, 1, 4, 6, 7, 8])
    rng = random_source(11)
    N = 1_000_000
    counts = np.zeros(6)
    for _ in range(N):
        counts += sample(fv, rng)
    p = fv.values()
    sigma = np.sqrt(N * p * (1 - p))
    assert np.all(np.abs(counts - N * p) <= 4 * sigma)


def test_half_frequencies_give_uniform_strings():
    fv = FrequencyVector.initial(ModelParams(3, 5))
    rng = random_source(5)
    N = 80_000
    codes = np.array([int("".join(map(str, sample(fv, rng))), 2) for _ in range(N)])
    counts = np.bincount(codes, minlength=8)
    sigma = np.sqrt(N / 8 * 7 / 8)
    assert np.all(np.abs(counts - N / 8) <= 4 * sigma)
