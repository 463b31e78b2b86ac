"""Dense linear algebra for small multi-qubit systems.

Subsystem 0 is the most significant bit of a computational-basis index,
so ``ket("01")`` is |0>_A |1>_B with A = subsystem 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
PURITY_TOL = 1e-10
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
EIG_CLUSTER_TOL = 1e-9
IMAG_TOL = 1e-8
PHASE_TOL = 1e-9


class DimensionMismatchError(ValueError):
    """Operands act on spaces of different dimension."""


class InvalidStateError(ValueError):
    """A state or density matrix violates one of its invariants."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector of an n-qubit pure state."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size
        if n < 2 or n & (n - 1):
            raise InvalidStateError(f"state length {n} is not a power of two >= 2")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __repr__(self):
        return f"StateVector({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix over ``dims``."""

    entries: np.ndarray
    dims: tuple = None

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got {rho.shape}")
        d = rho.shape[0]
        dims = self.dims
        if dims is None:
            dims = _qubit_dims(d)
        dims = tuple(int(x) for x in dims)
        if int(np.prod(dims)) != d:
            raise DimensionMismatchError(f"dims {dims} do not multiply to {d}")
        _check_density(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    @property
    def is_pure(self) -> bool:
        return abs(self.purity - 1.0) <= PURITY_TOL

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims},\n{np.array2string(self.entries, precision=6)})"


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator; on an ensemble it is the per-molecule term of a global sum."""

    matrix: np.ndarray
    label: str = field(default="")

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"observable must be square, got {m.shape}")
        if not is_hermitian(m):
            raise ValueError(f"observable {self.label!r} is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


StateLike = Union[StateVector, DensityMatrix]


def _qubit_dims(d: int) -> tuple:
    if d >= 2 and d & (d - 1) == 0:
        return (2,) * (d.bit_length() - 1)
    return (d,)


def _check_density(rho: np.ndarray) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"density matrix trace {tr!r} differs from 1")
    evals = np.linalg.eigvalsh(rho)
    if evals[0] < -PSD_TOL:
        raise InvalidStateError(f"density matrix has negative eigenvalue {evals[0]!r}")
    if np.sum(evals**2) > 1.0 + TRACE_TOL:
        raise InvalidStateError("density matrix purity exceeds 1")


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, Observable):
        return x.matrix
    if isinstance(x, DensityMatrix):
        return x.entries
    return np.asarray(x, dtype=complex)


def _as_vector(x) -> np.ndarray:
    if isinstance(x, StateVector):
        return x.amplitudes
    return np.asarray(x, dtype=complex).reshape(-1)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = _as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = _as_matrix(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


# ---------------------------------------------------------------------------
# Standard states and operators
# ---------------------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
for _m in (I2, SIGMA_X, SIGMA_Y, SIGMA_Z, HADAMARD, CNOT):
    _m.setflags(write=False)

SZ = Observable(SIGMA_Z, "sigma_z")
SX = Observable(SIGMA_X, "sigma_x")
SY = Observable(SIGMA_Y, "sigma_y")


def ket(bits: str) -> StateVector:
    """Computational basis state, e.g. ``ket("01")``."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"bad basis label {bits!r}")
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


KET0 = ket("0")
KET1 = ket("1")
# (|0> +- |1>)/sqrt(2); the 1/sqrt(2) is what normalization demands
PLUS_X = StateVector(np.array([1, 1]) / np.sqrt(2))
MINUS_X = StateVector(np.array([1, -1]) / np.sqrt(2))
PLUS_Y = StateVector(np.array([1, 1j]) / np.sqrt(2))
MINUS_Y = StateVector(np.array([1, -1j]) / np.sqrt(2))
PHI_PLUS = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))
PHI_MINUS = StateVector(np.array([1, 0, 0, -1]) / np.sqrt(2))
PSI_PLUS = StateVector(np.array([0, 1, 1, 0]) / np.sqrt(2))
PSI_MINUS = StateVector(np.array([0, 1, -1, 0]) / np.sqrt(2))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product of two matrices (or vectors)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def product_state(*states: StateVector) -> StateVector:
    amps = np.ones(1, dtype=complex)
    for s in states:
        amps = np.kron(amps, _as_vector(s))
    return StateVector(amps)


def outer(psi: StateVector) -> DensityMatrix:
    v = _as_vector(psi)
    return DensityMatrix(np.outer(v, v.conj()))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out every subsystem of ``rho`` not listed in ``keep``."""
    dims = rho.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if n < 2:
        raise DimensionMismatchError("partial trace needs at least two subsystems")
    if not keep or len(keep) == n:
        raise DimensionMismatchError(f"keep={keep} must be a nonempty proper subset")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionMismatchError(f"keep={keep} out of range for {n} subsystems")
    t = rho.entries.reshape(dims + dims)
    row = list(range(n))
    col = [n + i if i in keep else i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    d = int(np.prod([dims[i] for i in keep]))
    return DensityMatrix(reduced.reshape(d, d), tuple(dims[i] for i in keep))


def partial_transpose(rho, sys: int = 1, dims: Sequence[int] = None) -> np.ndarray:
    """Transpose subsystem ``sys`` of a (possibly non-normalized) operator."""
    m = _as_matrix(rho)
    if dims is None:
        dims = rho.dims if isinstance(rho, DensityMatrix) else _qubit_dims(m.shape[0])
    dims = tuple(dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[sys], axes[n + sys] = axes[n + sys], axes[sys]
    return t.transpose(axes).reshape(m.shape)


def expectation(state, omega) -> float:
    """<psi|omega|psi> for a state vector or Tr(rho omega) for a density matrix."""
    om = _as_matrix(omega)
    if isinstance(state, DensityMatrix):
        rho = state.entries
        if rho.shape != om.shape:
            raise DimensionMismatchError(f"state dim {rho.shape[0]} vs observable dim {om.shape[0]}")
        val = np.trace(rho @ om)
    else:
        v = _as_vector(state)
        if v.size != om.shape[0]:
            raise DimensionMismatchError(f"state dim {v.size} vs observable dim {om.shape[0]}")
        val = np.vdot(v, om @ v)
    if abs(val.imag) > IMAG_TOL:
        raise ValueError(f"expectation has imaginary part {val.imag!r}; observable not Hermitian?")
    return float(val.real)


def spectral_decompose(omega) -> list:
    """Distinct eigenvalues (ascending) paired with their eigenspace projectors."""
    m = _as_matrix(omega)
    if not is_hermitian(m):
        raise ValueError("spectral_decompose requires a Hermitian operator")
    evals, vecs = np.linalg.eigh(m)
    groups = [[0]]
    for i in range(1, evals.size):
        if evals[i] - evals[groups[-1][-1]] <= EIG_CLUSTER_TOL:
            groups[-1].append(i)
        else:
            groups.append([i])
    out = []
    for g in groups:
        v = vecs[:, g]
        out.append((float(np.mean(evals[g])), v @ v.conj().T))
    return out


def apply_operator(state, op, targets: Sequence[int] = None, dims: Sequence[int] = None):
    """Apply ``op`` to the ``targets`` subsystems of a vector (no unitarity check).

    Returns a raw amplitude array; used for non-unitary operators such as
    observables or projectors.
    """
    v = _as_vector(state)
    op = _as_matrix(op)
    if dims is None:
        dims = _qubit_dims(v.size)
    return _apply_left(v[:, None], op, targets, tuple(dims))[:, 0]


def _apply_left(a: np.ndarray, op: np.ndarray, targets, dims: tuple) -> np.ndarray:
    # a has shape (D, m); op acts on the row index restricted to targets
    n = len(dims)
    if targets is None:
        targets = list(range(n))
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets) or any(t < 0 or t >= n for t in targets):
        raise DimensionMismatchError(f"bad targets {targets} for {n} subsystems")
    sub = int(np.prod([dims[t] for t in targets]))
    if op.shape != (sub, sub):
        raise DimensionMismatchError(f"operator shape {op.shape} does not act on targets {targets}")
    cols = a.shape[1]
    t = a.reshape(dims + (cols,))
    op_t = op.reshape(tuple(dims[i] for i in targets) * 2)
    k = len(targets)
    res = np.tensordot(op_t, t, axes=(list(range(k, 2 * k)), targets))
    # res axes: targets (in order), remaining subsystems, cols
    rest = [i for i in range(n) if i not in targets]
    order = targets + rest
    inv = np.argsort(order)
    res = np.transpose(res, list(inv) + [n])
    return res.reshape(a.shape)


def apply_unitary(state, u, targets: Sequence[int] = None):
    """U|psi> or U rho U^dagger with ``u`` acting on ``targets``."""
    u = _as_matrix(u)
    if not is_unitary(u):
        raise ValueError("apply_unitary received a non-unitary matrix")
    if isinstance(state, DensityMatrix):
        dims = state.dims
        left = _apply_left(state.entries, u, targets, dims)
        both = _apply_left(left.conj().T, u, targets, dims).conj().T
        return DensityMatrix(both, dims)
    v = _as_vector(state)
    out = _apply_left(v[:, None], u, targets, _qubit_dims(v.size))[:, 0]
    return StateVector.normalized(out) if isinstance(state, StateVector) else out


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2."""
    va, vb = _as_vector(a), _as_vector(b)
    if va.size != vb.size:
        raise DimensionMismatchError(f"state dims {va.size} and {vb.size} differ")
    return float(abs(np.vdot(va, vb)) ** 2)


def canonical_phase(psi: StateVector) -> StateVector:
    """Rotate the global phase so the first non-negligible amplitude is real positive."""
    v = _as_vector(psi)
    nz = np.flatnonzero(np.abs(v) > PHASE_TOL)
    if nz.size == 0:
        raise InvalidStateError("state has no non-negligible amplitude")
    a = v[nz[0]]
    return StateVector(v * (abs(a) / a))


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    d = 2**n_qubits
    return StateVector.normalized(rng.normal(size=d) + 1j * rng.normal(size=d))


def random_hermitian(d: int, rng: np.random.Generator, label: str = "random") -> Observable:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return Observable((a + a.conj().T) / 2, label)
