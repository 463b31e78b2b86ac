import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qensemble.ensemble import (
    EmptyEnsembleError,
    Ensemble,
    SizeLimitError,
    compressed_dm,
    composition_report,
    full_state,
    global_expectation,
    global_fluctuation,
    global_fluctuation_trace_form,
    per_state_variance,
    same_composition,
    sampling_expectation,
)
from qensemble.qmath import (
    I2,
    KET0,
    KET1,
    MINUS_X,
    PHI_PLUS,
    PLUS_X,
    SIGMA_Z,
    SZ,
    DimensionMismatchError,
    StateVector,
    ket,
    random_hermitian,
    random_state,
)

import oracles

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def s1(N):
    return Ensemble([(KET0, N // 2), (KET1, N // 2)])


def s2(N):
    return Ensemble([(PLUS_X, N // 2), (MINUS_X, N // 2)])


def random_ensemble(rng, n_qubits, max_entries, max_count):
    k = int(rng.integers(1, max_entries + 1))
    return Ensemble([(random_state(n_qubits, rng), int(rng.integers(1, max_count + 1))) for _ in range(k)])


# -- construction -----------------------------------------------------------


def test_empty_rejected():
    with pytest.raises(EmptyEnsembleError):
        Ensemble([])
    with pytest.raises(EmptyEnsembleError):
        Ensemble([(KET0, 0)])


def test_negative_or_fractional_count_rejected():
    with pytest.raises(ValueError):
        Ensemble([(KET0, -1)])
    with pytest.raises(ValueError):
        Ensemble([(KET0, 1.5)])


def test_mixed_dimensions_rejected():
    with pytest.raises(DimensionMismatchError):
        Ensemble([(KET0, 1), (PHI_PLUS, 1)])


def test_duplicates_merge_up_to_phase():
    e = Ensemble([(KET0, 2), (StateVector(1j * KET0.amplitudes), 3), (KET1, 1)])
    assert len(e) == 2
    assert e.N == 6
    assert list(e.counts) == [5, 1]


def test_record_round_trip():
    e = Ensemble([(PLUS_X, 3), (KET1, 4)])
    assert same_composition(Ensemble.from_record(e.to_record()), e)


def test_composition_report_weights():
    rep = composition_report(Ensemble([(KET0, 3), (KET1, 1)]))
    assert [w for _, w in rep.weights] == [0.75, 0.25]
    np.testing.assert_allclose(rep.compressed.entries, np.diag([0.75, 0.25]))


# -- compressed_dm ----------------------------------------------------------


def test_compressed_dm_half_identity():
    np.testing.assert_allclose(compressed_dm(Ensemble([(KET0, 1), (KET1, 1)])).entries, I2 / 2)


def test_compressed_dm_imbalanced_z():
    N, nd = 1000, 37
    e = Ensemble([(KET0, N // 2 - nd), (KET1, N // 2 + nd)])
    np.testing.assert_allclose(
        compressed_dm(e).entries, np.diag([0.5 - nd / N, 0.5 + nd / N]), atol=1e-15
    )


def test_compressed_dm_imbalanced_x():
    N, nx = 1000, 12
    e = Ensemble([(PLUS_X, N // 2 - nx), (MINUS_X, N // 2 + nx)])
    expected = np.array([[0.5, -nx / N], [-nx / N, 0.5]])
    np.testing.assert_allclose(compressed_dm(e).entries, expected, atol=1e-15)


@given(seeds, st.integers(1, 2))
@settings(max_examples=30, deadline=None)
def test_single_entry_compressed_dm_is_pure(seed, n):
    e = Ensemble([(random_state(n, np.random.default_rng(seed)), 7)])
    assert abs(compressed_dm(e).purity - 1) < 1e-10


# -- expectations -----------------------------------------------------------


def test_sampling_expectation_examples():
    assert sampling_expectation(s1(100), SZ) == 0
    assert sampling_expectation(Ensemble([(KET0, 10)]), SZ) == 1
    assert sampling_expectation(Ensemble([(KET0, 3), (KET1, 1)]), SZ) == pytest.approx(0.5, abs=1e-15)


def test_global_expectation_examples():
    assert global_expectation(Ensemble([(KET0, 100)]), SZ) == 100
    assert global_expectation(s1(10_000), SZ) == 0
    assert global_expectation(Ensemble([(KET0, 3), (KET1, 1)]), SZ) == pytest.approx(2, abs=1e-14)


def test_expectation_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        sampling_expectation(s1(2), np.kron(SIGMA_Z, SIGMA_Z))


# -- variances and fluctuations ---------------------------------------------


def test_per_state_variance_examples():
    assert per_state_variance(KET0, SZ) == 0
    assert per_state_variance(PLUS_X, SZ) == pytest.approx(1, abs=1e-15)
    assert per_state_variance(PHI_PLUS, np.kron(SIGMA_Z, SIGMA_Z)) == 0


def test_fluctuation_despagnat_pair():
    assert global_fluctuation(s1(10_000), SZ) == 0
    assert abs(global_fluctuation(s2(10_000), SZ) - 100.0) < 1e-10
    assert abs(global_fluctuation(s2(2), SZ) - math.sqrt(2)) < 1e-12


def test_fluctuation_all_plus_x():
    assert global_fluctuation(Ensemble([(PLUS_X, 400)]), SZ) == pytest.approx(20, abs=1e-12)


def test_distinct_compositions_share_dm():
    N = 10_000
    a, b = s1(N), s2(N)
    assert np.max(np.abs(compressed_dm(a).entries - compressed_dm(b).entries)) < 1e-12
    assert not same_composition(a, b)
    diff = global_fluctuation(b, SZ) - global_fluctuation(a, SZ)
    assert abs(diff - math.sqrt(N)) < 1e-10


def test_trace_form_identity_on_random_ensembles():
    rng = np.random.default_rng(20261015)
    for _ in range(200):
        n = int(rng.integers(1, 3))
        e = random_ensemble(rng, n, 5, 200_000)
        om = random_hermitian(2**n, rng)
        a = global_fluctuation(e, om) ** 2
        b = global_fluctuation_trace_form(e, om) ** 2
        assert abs(a - b) <= 1e-9 * max(a, 1.0)


def test_bruteforce_oracle_small_ensembles():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(1, 3))
        N_max = 6 if n == 1 else 3
        e = random_ensemble(rng, n, 3, 2)
        while e.N > N_max:
            e = random_ensemble(rng, n, 3, 2)
        om = random_hermitian(2**n, rng)
        molecules = [s.amplitudes for s, c in e.entries for _ in range(c)]
        brute = oracles.global_variance_bruteforce(molecules, om)
        assert abs(brute - global_fluctuation(e, om) ** 2) < 1e-10


# -- full_state -------------------------------------------------------------


def test_full_state_examples():
    np.testing.assert_array_equal(full_state(Ensemble([(KET0, 2)])).amplitudes, ket("00").amplitudes)
    np.testing.assert_array_equal(
        full_state(Ensemble([(KET1, 1), (KET0, 1)])).amplitudes, ket("01").amplitudes
    )
    np.testing.assert_allclose(full_state(Ensemble([(PLUS_X, 2)])).amplitudes, np.full(4, 0.5), atol=1e-15)


def test_full_state_size_guard():
    with pytest.raises(SizeLimitError):
        full_state(Ensemble([(KET0, 21)]))


# -- same_composition -------------------------------------------------------


def test_same_composition_examples():
    N = 100
    assert same_composition(s1(N), Ensemble([(KET1, N // 2), (KET0, N // 2)]))
    assert not same_composition(s1(N), s2(N))
    phased = Ensemble([(StateVector(np.exp(0.3j) * KET0.amplitudes), N // 2), (KET1, N // 2)])
    assert same_composition(s1(N), phased)


def test_same_composition_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        same_composition(s1(2), Ensemble([(PHI_PLUS, 2)]))


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_same_composition_implies_same_statistics(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    e = random_ensemble(rng, n, 4, 50)
    shuffled = list(e.entries)
    rng.shuffle(shuffled)
    phased = Ensemble([(StateVector(np.exp(1j * rng.uniform(0, 6)) * s.amplitudes), c) for s, c in shuffled])
    assert same_composition(e, phased)
    om = random_hermitian(2**n, rng)
    np.testing.assert_allclose(compressed_dm(e).entries, compressed_dm(phased).entries, atol=1e-12)
    assert global_expectation(e, om) == pytest.approx(global_expectation(phased, om), abs=1e-9)
    assert global_fluctuation(e, om) == pytest.approx(global_fluctuation(phased, om), abs=1e-9)
