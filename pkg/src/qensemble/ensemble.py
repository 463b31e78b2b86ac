"""Ensembles as explicit compositions {(|psi_k>, N_k)} and their global statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .qmath import (
    DensityMatrix,
    DimensionMismatchError,
    Observable,
    StateVector,
    _as_matrix,
    canonical_phase,
    expectation,
    fidelity,
    product_state,
)

DUPLICATE_FIDELITY = 1.0 - 1e-12
FULL_STATE_MAX_QUBITS = 20


class EmptyEnsembleError(ValueError):
    pass


class SizeLimitError(ValueError):
    pass


def _sort_key(psi: StateVector) -> tuple:
    key = []
    for a in psi.amplitudes:
        key.append(round(float(a.real), 12))
        key.append(round(float(a.imag), 12))
    return tuple(key)


class Ensemble:
    """Immutable multiset of pure states with integer molecule counts.

    Entries are canonicalized on construction: global phases fixed, states
    with fidelity above ``1 - 1e-12`` merged (counts added), zero-count
    entries dropped, and the remainder sorted in descending lexicographic
    order of their amplitudes so that |0> precedes |1>.
    """

    __slots__ = ("_entries", "_n_qubits", "_N")

    def __init__(self, entries: Iterable):
        merged: list = []
        n_qubits = None
        for state, count in entries:
            if not isinstance(state, StateVector):
                state = StateVector(state)
            if n_qubits is None:
                n_qubits = state.n_qubits
            elif state.n_qubits != n_qubits:
                raise DimensionMismatchError(
                    f"ensemble mixes {n_qubits}-qubit and {state.n_qubits}-qubit states"
                )
            if isinstance(count, (bool, np.bool_)) or int(count) != count:
                raise ValueError(f"count {count!r} is not an integer")
            count = int(count)
            if count < 0:
                raise ValueError(f"negative count {count}")
            if count == 0:
                continue
            state = canonical_phase(state)
            for slot in merged:
                if fidelity(slot[0], state) > DUPLICATE_FIDELITY:
                    slot[1] += count
                    break
            else:
                merged.append([state, count])
        if not merged:
            raise EmptyEnsembleError("ensemble has no molecules")
        merged.sort(key=lambda s: _sort_key(s[0]), reverse=True)
        self._entries = tuple((s, c) for s, c in merged)
        self._n_qubits = n_qubits
        self._N = sum(c for _, c in merged)

    @property
    def entries(self) -> tuple:
        return self._entries

    @property
    def states(self) -> list:
        return [s for s, _ in self._entries]

    @property
    def counts(self) -> np.ndarray:
        return np.array([c for _, c in self._entries], dtype=np.int64)

    @property
    def N(self) -> int:
        return self._N

    @property
    def n_qubits(self) -> int:
        return self._n_qubits

    @property
    def dim(self) -> int:
        return 2**self._n_qubits

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        body = ", ".join(
            f"({np.array2string(s.amplitudes, precision=4)}, {c})" for s, c in self._entries
        )
        return f"Ensemble([{body}])"

    def to_record(self) -> dict:
        return {
            "n_qubits": self._n_qubits,
            "N": self._N,
            "entries": [
                {
                    "count": c,
                    "amplitudes": [[float(a.real), float(a.imag)] for a in s.amplitudes],
                }
                for s, c in self._entries
            ],
        }

    @classmethod
    def from_record(cls, record: dict) -> "Ensemble":
        entries = []
        for e in record["entries"]:
            amps = np.array([complex(re, im) for re, im in e["amplitudes"]])
            entries.append((StateVector.normalized(amps), e["count"]))
        return cls(entries)


def fingerprint(psi: StateVector, digits: int = 12) -> str:
    """Short text identity of a canonical-phase state."""
    parts = []
    for a in canonical_phase(psi).amplitudes:
        parts.append(f"{a.real:+.{digits}g}{a.imag:+.{digits}g}j")
    return "[" + ",".join(parts) + "]"


@dataclass(frozen=True)
class CompositionReport:
    N: int
    weights: tuple
    compressed: DensityMatrix

    def to_record(self) -> dict:
        rho = self.compressed.entries
        return {
            "N": self.N,
            "weights": [[fp, w] for fp, w in self.weights],
            "compressed_dm": [[[float(x.real), float(x.imag)] for x in row] for row in rho],
        }


def composition_report(e: Ensemble) -> CompositionReport:
    weights = tuple((fingerprint(s), c / e.N) for s, c in e.entries)
    return CompositionReport(e.N, weights, compressed_dm(e))


def _check_dim(e: Ensemble, omega) -> np.ndarray:
    m = _as_matrix(omega)
    if m.shape != (e.dim, e.dim):
        raise DimensionMismatchError(f"observable dim {m.shape[0]} vs molecule dim {e.dim}")
    return m


def compressed_dm(e: Ensemble) -> DensityMatrix:
    rho = np.zeros((e.dim, e.dim), dtype=complex)
    for s, c in e.entries:
        v = s.amplitudes
        rho += (c / e.N) * np.outer(v, v.conj())
    # summation noise can leave ~1e-17 anti-Hermitian residue
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho)


def sampling_expectation(e: Ensemble, omega) -> float:
    """<Omega> = Tr(rho Omega) for one randomly fetched molecule."""
    _check_dim(e, omega)
    return expectation(compressed_dm(e), omega)


def global_expectation(e: Ensemble, omega) -> float:
    """Expectation of the global observable sum_i Omega(i): N Tr(rho Omega)."""
    return e.N * sampling_expectation(e, omega)


def per_state_variance(psi: StateVector, omega) -> float:
    """<psi|Omega^2|psi> - <psi|Omega|psi>^2.

    Evaluated as ||(Omega - <Omega>)psi||^2 / ||psi||^2, which is exactly zero
    for eigenvectors and insensitive to last-bit normalization error.
    """
    m = _as_matrix(omega)
    v = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    if v.size != m.shape[0]:
        raise DimensionMismatchError(f"state dim {v.size} vs observable dim {m.shape[0]}")
    nn = float(np.real(np.vdot(v, v)))
    mv = m @ v
    mean = float(np.real(np.vdot(v, mv))) / nn
    r = mv - mean * v
    return float(np.real(np.vdot(r, r))) / nn


def global_variance(e: Ensemble, omega) -> float:
    _check_dim(e, omega)
    return float(sum(c * per_state_variance(s, omega) for s, c in e.entries))


def global_fluctuation(e: Ensemble, omega) -> float:
    """Standard deviation of sum_i Omega(i) over independent global measurements.

    Each molecule is an independent system in a definite pure state, so the
    variance is sum_k N_k (Delta Omega)_k^2.
    """
    return math.sqrt(global_variance(e, omega))


def global_fluctuation_trace_form(e: Ensemble, omega) -> float:
    """Same quantity as ``global_fluctuation`` via N Tr(rho Omega^2) - sum_k N_k <Omega>_k^2."""
    m = _check_dim(e, omega)
    first = e.N * expectation(compressed_dm(e), m @ m)
    second = sum(c * expectation(s, m) ** 2 for s, c in e.entries)
    return math.sqrt(max(first - second, 0.0))


def full_state(e: Ensemble) -> StateVector:
    """Tensor product of every molecule, in canonical entry order."""
    total = e.N * e.n_qubits
    if total > FULL_STATE_MAX_QUBITS:
        raise SizeLimitError(
            f"full ensemble state needs {total} qubits; limit is {FULL_STATE_MAX_QUBITS}"
        )
    molecules = [s for s, c in e.entries for _ in range(c)]
    return product_state(*molecules)


def same_composition(e1: Ensemble, e2: Ensemble) -> bool:
    if e1.n_qubits != e2.n_qubits:
        raise DimensionMismatchError("ensembles have different qubit counts")
    if len(e1) != len(e2) or e1.N != e2.N:
        return False
    unused = list(e2.entries)
    for s, c in e1.entries:
        for i, (t, d) in enumerate(unused):
            if c == d and fidelity(s, t) > DUPLICATE_FIDELITY:
                del unused[i]
                break
        else:
            return False
    return True
