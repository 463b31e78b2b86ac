import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qensemble import _accel
from qensemble.measurement import born_cdf

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def random_tables(seed, m, k, n, trials=1):
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(k), size=m)
    # knock out some branches to exercise the impossible-outcome path
    probs[rng.random((m, k)) < 0.2] = 0.0
    probs[:, 0] += 1e-3
    probs /= probs.sum(axis=1, keepdims=True)
    cdf = np.vstack([born_cdf(p) for p in probs])
    rows = rng.integers(0, m, size=n)
    u = rng.random((trials, n))
    return u, cdf, rows, probs


@needs_numba
@given(st.integers(0, 2**31), st.integers(1, 5), st.integers(1, 6), st.integers(0, 300), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_tally_backends_identical(seed, m, k, n, trials):
    u, cdf, rows, _ = random_tables(seed, m, k, n, trials)
    a = _accel.tally_trials_numba(u, cdf, rows)
    b = _accel.tally_trials_numpy(u, cdf, rows)
    assert a.dtype == b.dtype == np.int64
    np.testing.assert_array_equal(a, b)


@needs_numba
@given(st.integers(0, 2**31), st.integers(1, 5), st.integers(1, 6), st.integers(0, 300))
@settings(max_examples=60, deadline=None)
def test_draw_backends_identical(seed, m, k, n):
    u, cdf, rows, _ = random_tables(seed, m, k, n)
    np.testing.assert_array_equal(
        _accel.draw_categorical_numba(u[0], cdf, rows), _accel.draw_categorical_numpy(u[0], cdf, rows)
    )


def test_boundary_uniforms():
    cdf = born_cdf(np.array([0.25, 0.0, 0.75]))[None, :]
    u = np.array([0.0, 0.25, np.nextafter(0.25, 0), np.nextafter(1.0, 0)])
    rows = np.zeros(4, dtype=np.int64)
    expected = [0, 2, 0, 2]
    np.testing.assert_array_equal(_accel.draw_categorical_numpy(u, cdf, rows), expected)
    np.testing.assert_array_equal(_accel.draw_categorical(u, cdf, rows), expected)


def test_impossible_branch_never_counted():
    u, cdf, rows, probs = random_tables(1, 4, 5, 20_000, 2)
    counts = _accel.tally_trials(u, cdf, rows)
    assert np.all(counts[:, probs == 0] == 0)
    assert counts.sum() == u.size


def test_tally_frequencies_follow_probabilities():
    u, cdf, rows, probs = random_tables(2, 1, 4, 200_000)
    freq = _accel.tally_trials(u, cdf, rows)[0, 0] / u.size
    np.testing.assert_allclose(freq, probs[0], atol=5e-3)


def test_env_flag_selects_numpy():
    code = "from qensemble import _accel; print(_accel.backend_name())"
    env = dict(os.environ, QENSEMBLE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("QENSEMBLE_DISABLE_NUMBA")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if _accel.HAVE_NUMBA else "numpy")
