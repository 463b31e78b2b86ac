"""Born-rule projective measurement with collapse.

All sampling is inverse-CDF on uniforms drawn from an :class:`RngStream`:
a molecule whose outcome CDF is ``c`` yields the first outcome ``j`` with
``u < c[j]``. Outcomes with Born weight below 1e-12 are never drawn.
Measuring an ensemble consumes one uniform per molecule, molecules taken
in canonical entry order, so ``measure_ensemble`` gives exactly what a
sequence of ``measure_state`` calls on the same uniforms would.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _accel
from .ensemble import Ensemble
from .qmath import (
    DimensionMismatchError,
    I2,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    StateVector,
    spectral_decompose,
)
from .rng import RngStream

BORN_FLOOR = 1e-12
CHUNK_ELEMENTS = 1 << 22
AUTO_PER_MOLECULE_LIMIT = 250_000_000

BELL_BASIS = (
    ("Phi+", PHI_PLUS),
    ("Phi-", PHI_MINUS),
    ("Psi+", PSI_PLUS),
    ("Psi-", PSI_MINUS),
)


class Branches(NamedTuple):
    """Outcome table of one pure state against one observable."""

    eigenvalues: np.ndarray
    probabilities: np.ndarray
    collapsed: list  # StateVector per eigenvalue, None where impossible

    @property
    def cdf(self) -> np.ndarray:
        return born_cdf(self.probabilities)


def born_cdf(probabilities: np.ndarray) -> np.ndarray:
    p = np.asarray(probabilities, dtype=float)
    live = np.flatnonzero(p > 0)
    c = np.cumsum(p)
    # everything from the last possible outcome on is exactly 1
    c[live[-1]:] = 1.0
    return c


def branches(psi: StateVector, omega, spectrum=None) -> Branches:
    """Born weights and collapsed states of ``psi`` for every eigenvalue of ``omega``."""
    if spectrum is None:
        spectrum = spectral_decompose(omega)
    v = psi.amplitudes
    if v.size != spectrum[0][1].shape[0]:
        raise DimensionMismatchError(
            f"state dim {v.size} vs observable dim {spectrum[0][1].shape[0]}"
        )
    evals = np.array([lam for lam, _ in spectrum])
    probs = np.zeros(len(spectrum))
    collapsed = [None] * len(spectrum)
    for j, (_, proj) in enumerate(spectrum):
        w = proj @ v
        p = float(np.real(np.vdot(w, w)))
        if p >= BORN_FLOOR:
            probs[j] = p
            collapsed[j] = StateVector.normalized(w)
    total = probs.sum()
    if total == 0:
        raise ValueError("every Born weight is below 1e-12; state is numerically invalid")
    return Branches(evals, probs / total, collapsed)


def _pick(u: float, cdf: np.ndarray) -> int:
    j = 0
    while j < cdf.size - 1 and u >= cdf[j]:
        j += 1
    return j


def measure_state(psi: StateVector, omega, rng: RngStream):
    """Projective measurement of one system.

    Returns ``(eigenvalue, collapsed_state, probability)`` where
    ``probability`` is the Born weight of the outcome that occurred.
    """
    b = branches(psi, omega)
    j = _pick(rng.generator().random(), b.cdf)
    return float(b.eigenvalues[j]), b.collapsed[j], float(b.probabilities[j])


@dataclass(frozen=True)
class MeasurementRecord:
    outcomes: tuple  # (eigenvalue, multiplicity), ascending eigenvalue
    post_ensemble: Ensemble
    global_sum: float
    imbalance: float  # lower-eigenvalue count minus N/2; 0 unless two outcomes

    def to_record(self) -> dict:
        return {
            "outcomes": [[lam, m] for lam, m in self.outcomes],
            "post_ensemble": self.post_ensemble.to_record(),
            "global_sum": self.global_sum,
            "imbalance": self.imbalance,
        }


def _ensemble_tables(e: Ensemble, omega):
    spectrum = spectral_decompose(omega)
    if spectrum[0][1].shape[0] != e.dim:
        raise DimensionMismatchError(
            f"observable dim {spectrum[0][1].shape[0]} vs molecule dim {e.dim}"
        )
    table = [branches(s, omega, spectrum) for s in e.states]
    evals = table[0].eigenvalues
    cdf = np.vstack([b.cdf for b in table])
    return evals, table, cdf


def _weighted_sum(totals: np.ndarray, evals: np.ndarray) -> np.ndarray:
    # fixed summation order keeps sums bit-stable across backends and chunkings
    out = np.zeros(totals.shape[0])
    for j in range(evals.size):
        out = out + totals[:, j] * evals[j]
    return out


def _imbalance(evals: np.ndarray, totals: np.ndarray, N: int) -> float:
    if evals.size != 2:
        return 0.0
    return float(totals[0]) - N / 2


def measure_ensemble(e: Ensemble, omega, rng: RngStream) -> MeasurementRecord:
    """Measure ``omega`` on every molecule of ``e`` once."""
    evals, table, cdf = _ensemble_tables(e, omega)
    rows = np.repeat(np.arange(len(table)), e.counts)
    u = rng.generator().random(e.N)
    counts = _accel.tally_trials(u[None, :], cdf, rows)[0]
    post = []
    for k, b in enumerate(table):
        for j, c in enumerate(counts[k]):
            if c:
                post.append((b.collapsed[j], int(c)))
    totals = counts.sum(axis=0)
    outcomes = tuple((float(evals[j]), int(totals[j])) for j in range(evals.size) if totals[j])
    gsum = float(_weighted_sum(totals[None, :], evals)[0])
    return MeasurementRecord(outcomes, Ensemble(post), gsum, _imbalance(evals, totals, e.N))


# ---------------------------------------------------------------------------
# Repeated global measurements
# ---------------------------------------------------------------------------


def _uniform_block(rng: RngStream, start: int, stop: int, n: int) -> np.ndarray:
    u = np.empty((stop - start, n))
    for i, t in enumerate(range(start, stop)):
        u[i] = rng.for_trial(t).generator().random(n)
    return u


def _chunks(trials: int, per_trial: int) -> list:
    size = max(1, CHUNK_ELEMENTS // max(per_trial, 1))
    return [(a, min(a + size, trials)) for a in range(0, trials, size)]


def _run_chunks(fn, chunks, threads: int) -> list:
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def outcome_totals(
    e: Ensemble,
    omega,
    trials: int,
    rng: RngStream,
    method: str = "auto",
    threads: int = 1,
):
    """Per-trial outcome counts of a global measurement, shape (trials, K).

    Trial ``t`` draws from ``rng.for_trial(t)``. ``method="molecule"`` samples
    each molecule; ``"multinomial"`` samples each entry's outcome counts in
    one multinomial draw, which has the same distribution and scales to
    large N. ``"auto"`` picks per-molecule sampling below 2.5e8 draws.
    Returns ``(eigenvalues, totals, method_used)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    evals, table, cdf = _ensemble_tables(e, omega)
    if method == "auto":
        method = "molecule" if e.N * trials <= AUTO_PER_MOLECULE_LIMIT else "multinomial"
    if method == "molecule":
        rows = np.repeat(np.arange(len(table)), e.counts)

        def work(chunk):
            a, b = chunk
            u = _uniform_block(rng, a, b, e.N)
            return _accel.tally_trials(u, cdf, rows).sum(axis=1)

        parts = _run_chunks(work, _chunks(trials, e.N), threads)
    elif method == "multinomial":
        probs = [b.probabilities for b in table]
        counts = e.counts

        def work(chunk):
            a, b = chunk
            out = np.zeros((b - a, evals.size), dtype=np.int64)
            for i, t in enumerate(range(a, b)):
                g = rng.for_trial(t).generator()
                for k in range(len(probs)):
                    out[i] += g.multinomial(counts[k], probs[k])
            return out

        parts = _run_chunks(work, _chunks(trials, 64 * len(table)), threads)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return evals, np.concatenate(parts, axis=0), method


def global_sum_samples(e, omega, trials, rng, method="auto", threads=1) -> np.ndarray:
    """Realized values of sum_i Omega(i) over ``trials`` independent global measurements."""
    evals, totals, _ = outcome_totals(e, omega, trials, rng, method, threads)
    return _weighted_sum(totals, evals)


def empirical_global_stats(e, omega, trials, rng, method="auto", threads=1):
    """Sample mean and sample standard deviation (ddof=1) of the global sum."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    s = global_sum_samples(e, omega, trials, rng, method, threads)
    return float(np.mean(s)), float(np.std(s, ddof=1))


# ---------------------------------------------------------------------------
# Entangled pairs
# ---------------------------------------------------------------------------


class RemoteBranches(NamedTuple):
    eigenvalues: np.ndarray
    probabilities: np.ndarray
    a_states: list
    b_states: list

    @property
    def cdf(self) -> np.ndarray:
        return born_cdf(self.probabilities)


def remote_branches(pair: StateVector, basis) -> RemoteBranches:
    """Outcomes of measuring ``basis`` on qubit B of a pair, with A's conditional states."""
    v = pair.amplitudes
    if v.size != 4:
        raise DimensionMismatchError("remote collapse needs a two-qubit pair state")
    spectrum = spectral_decompose(basis)
    if spectrum[0][1].shape != (2, 2):
        raise DimensionMismatchError("basis observable must act on one qubit")
    evals = np.array([lam for lam, _ in spectrum])
    probs = np.zeros(len(spectrum))
    a_states = [None] * len(spectrum)
    b_states = [None] * len(spectrum)
    for j, (_, proj) in enumerate(spectrum):
        w = np.kron(I2, proj) @ v
        p = float(np.real(np.vdot(w, w)))
        if p < BORN_FLOOR:
            continue
        # rows index A, columns index B; a product state has rank one
        m = w.reshape(2, 2) / math.sqrt(p)
        uu, sv, vh = np.linalg.svd(m)
        if sv[1] > 1e-9 * sv[0]:
            raise ValueError("conditional state of A is not pure for this basis")
        probs[j] = p
        a_states[j] = StateVector.normalized(uu[:, 0])
        b_states[j] = StateVector.normalized(vh[0])
    return RemoteBranches(evals, probs / probs.sum(), a_states, b_states)


def measure_pairs_remote(pair: StateVector, n_pairs: int, basis, rng: RngStream):
    """Measure ``basis`` on B of ``n_pairs`` copies of ``pair``; return (ensemble_A, ensemble_B)."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rb = remote_branches(pair, basis)
    u = rng.generator().random(n_pairs)
    counts = _accel.tally_trials(u[None, :], rb.cdf[None, :], np.zeros(n_pairs, dtype=np.int64))[0, 0]
    ens_a = Ensemble([(rb.a_states[j], int(c)) for j, c in enumerate(counts) if c])
    ens_b = Ensemble([(rb.b_states[j], int(c)) for j, c in enumerate(counts) if c])
    return ens_a, ens_b


def remote_outcome_counts(rb: RemoteBranches, n_pairs: int, rng: RngStream, runs: int, threads: int = 1):
    """B-outcome counts for ``runs`` independent batches of ``n_pairs`` pairs.

    Run ``r`` draws from ``rng.for_trial(r)``, so row ``r`` equals the
    counts behind ``measure_pairs_remote(..., rng.for_trial(r))``.
    """
    cdf = rb.cdf[None, :]
    rows = np.zeros(n_pairs, dtype=np.int64)

    def work(chunk):
        a, b = chunk
        u = _uniform_block(rng, a, b, n_pairs)
        return _accel.tally_trials(u, cdf, rows)[:, 0, :]

    return np.concatenate(_run_chunks(work, _chunks(runs, n_pairs), threads), axis=0)


def pair_imbalance(counts: np.ndarray, n_pairs: int) -> np.ndarray:
    """Surplus of the lower-eigenvalue outcome over N/2 (N_delta or N_x)."""
    return counts[..., 0] - n_pairs / 2


def bell_basis_measure(pair: StateVector, rng: RngStream):
    """Joint measurement in {Phi+, Phi-, Psi+, Psi-}; returns (label, probability)."""
    v = pair.amplitudes if isinstance(pair, StateVector) else np.asarray(pair, dtype=complex)
    if v.size != 4:
        raise DimensionMismatchError("Bell measurement needs a two-qubit state")
    probs = np.array([abs(np.vdot(b.amplitudes, v)) ** 2 for _, b in BELL_BASIS])
    probs[probs < BORN_FLOOR] = 0.0
    probs = probs / probs.sum()
    j = _pick(rng.generator().random(), born_cdf(probs))
    return BELL_BASIS[j][0], float(probs[j])


def bell_probabilities(pair: StateVector) -> dict:
    v = pair.amplitudes
    return {label: float(abs(np.vdot(b.amplitudes, v)) ** 2) for label, b in BELL_BASIS}
