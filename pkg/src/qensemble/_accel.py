"""Hot Monte Carlo kernels, numba-compiled when available.

Every kernel has a pure-numpy twin with identical integer output for the
same inputs. Randomness never enters a kernel: callers draw uniforms from
their own seeded streams and pass them in, so switching backends cannot
change a single result.

Set ``QENSEMBLE_DISABLE_NUMBA=1`` to force the numpy path.
"""

import os

import numpy as np

DISABLE_ENV = "QENSEMBLE_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def draw_categorical_numpy(u, cdf, rows):
    """Inverse-CDF draw: index of the first ``cdf[rows[i]]`` entry exceeding ``u[i]``."""
    return np.count_nonzero(u[:, None] >= cdf[rows, :-1], axis=1).astype(np.int64)


def tally_trials_numpy(u, cdf, rows):
    """Count outcomes per trial and per row.

    ``u`` has shape (trials, n_samples); sample ``i`` of every trial uses
    CDF row ``rows[i]``. Returns int64 counts of shape (trials, m, K).
    """
    n_trials, n_samples = u.shape
    m, k = cdf.shape
    out = np.zeros((n_trials, m, k), dtype=np.int64)
    if n_trials == 0 or n_samples == 0:
        return out
    # one comparison block per row keeps peak memory at u.size * K
    for r in range(m):
        cols = np.flatnonzero(rows == r)
        if cols.size == 0:
            continue
        block = u[:, cols]
        idx = np.zeros(block.shape, dtype=np.int64)
        for j in range(k - 1):
            idx += block >= cdf[r, j]
        for j in range(k):
            out[:, r, j] = np.count_nonzero(idx == j, axis=1)
    return out


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def draw_categorical_numba(u, cdf, rows):
        n = u.shape[0]
        k = cdf.shape[1]
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            r = rows[i]
            x = u[i]
            j = 0
            while j < k - 1 and x >= cdf[r, j]:
                j += 1
            out[i] = j
        return out

    @numba.njit(cache=True, nogil=True)
    def tally_trials_numba(u, cdf, rows):
        n_trials, n_samples = u.shape
        m, k = cdf.shape
        out = np.zeros((n_trials, m, k), dtype=np.int64)
        for t in range(n_trials):
            for i in range(n_samples):
                r = rows[i]
                x = u[t, i]
                j = 0
                while j < k - 1 and x >= cdf[r, j]:
                    j += 1
                out[t, r, j] += 1
        return out

else:  # pragma: no cover
    draw_categorical_numba = None
    tally_trials_numba = None


def _prep(u, cdf, rows):
    return (
        np.ascontiguousarray(u, dtype=np.float64),
        np.ascontiguousarray(cdf, dtype=np.float64),
        np.ascontiguousarray(rows, dtype=np.int64),
    )


def draw_categorical(u, cdf, rows):
    u, cdf, rows = _prep(u, cdf, rows)
    if USE_NUMBA:
        return draw_categorical_numba(u, cdf, rows)
    return draw_categorical_numpy(u, cdf, rows)


def tally_trials(u, cdf, rows):
    u, cdf, rows = _prep(u, cdf, rows)
    if USE_NUMBA:
        return tally_trials_numba(u, cdf, rows)
    return tally_trials_numpy(u, cdf, rows)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
