"""Effective pure states and their product-state decompositions.

The two-qubit dictionary is the six single-qubit projectors
``P_i = (1 + sigma_i)/2`` (i = 1..3 for x, y, z) and ``P_i = (1 - sigma_i)/2``
(i = 4..6), combined pairwise into 36 product terms ``P_i (x) P_j``.
A decomposition stores its coefficient table ``C`` with weights
``w_ij = (1/9 + C_ij)/4``; ``C = 0`` is the maximally mixed state.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls

from .ensemble import Ensemble, compressed_dm, global_fluctuation
from .measurement import empirical_global_stats
from .qmath import (
    KET0,
    MINUS_X,
    MINUS_Y,
    PHI_PLUS,
    PLUS_X,
    PLUS_Y,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    Observable,
    StateVector,
    ket,
    outer,
    partial_transpose,
    product_state,
)
from .report import conformance
from .rng import RngStream

SOLVER_TOL = 1e-10
INFEASIBLE_TOL = 1e-8
TRACE_ROW_WEIGHT = 1e3


class InfeasibleDecompositionError(ValueError):
    """No nonnegative mixture of dictionary products reproduces the target."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True, eq=False)
class PauliDictionary:
    projectors: np.ndarray  # (6, 2, 2)
    states: tuple  # kets onto which each projector projects

    def product(self, i: int, j: int) -> np.ndarray:
        return np.kron(self.projectors[i], self.projectors[j])

    def product_state(self, i: int, j: int) -> StateVector:
        return product_state(self.states[i], self.states[j])


def pauli_dictionary() -> PauliDictionary:
    eye = np.eye(2)
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    projs = [(eye + s) / 2 for s in paulis] + [(eye - s) / 2 for s in paulis]
    states = (PLUS_X, PLUS_Y, KET0, MINUS_X, MINUS_Y, ket("1"))
    return PauliDictionary(np.array(projs), states)


DICTIONARY = pauli_dictionary()


@dataclass(frozen=True, eq=False)
class ProductDecomposition:
    coefficients: np.ndarray  # C_ij, 6x6

    @property
    def weights(self) -> np.ndarray:
        return (1.0 / 9.0 + np.asarray(self.coefficients)) / 4.0

    @classmethod
    def from_weights(cls, w) -> "ProductDecomposition":
        return cls(4.0 * np.asarray(w, dtype=float).reshape(6, 6) - 1.0 / 9.0)

    @property
    def is_convex(self) -> bool:
        return bool(self.weights.min() >= -1e-12)


@dataclass(frozen=True)
class EffectivePureState:
    epsilon: float
    rho_eff: DensityMatrix

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon={self.epsilon} outside (0, 1]")

    @property
    def d(self) -> int:
        return self.rho_eff.dim


def effective_dm(eps: EffectivePureState) -> DensityMatrix:
    """((1 - eps)/d) I_d + eps rho_eff."""
    d = eps.d
    rho = (1.0 - eps.epsilon) / d * np.eye(d) + eps.epsilon * eps.rho_eff.entries
    return DensityMatrix(rho, eps.rho_eff.dims)


def effective_bell(epsilon: float) -> DensityMatrix:
    return effective_dm(EffectivePureState(epsilon, outer(PHI_PLUS)))


def effective_plus_x_zero(epsilon: float) -> DensityMatrix:
    return effective_dm(EffectivePureState(epsilon, outer(product_state(PLUS_X, KET0))))


def load_table(name: str, epsilon: float) -> ProductDecomposition:
    """Read a shipped coefficient table (``"table1"`` or ``"table2"``) at a given epsilon."""
    text = resources.files("qensemble").joinpath("data", f"{name}.csv").read_text("utf-8")
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    c = np.zeros((6, 6))
    for rec in csv.DictReader(io.StringIO("\n".join(rows))):
        c[int(rec["row"]) - 1, int(rec["col"]) - 1] = float(Fraction(rec["coefficient"])) * epsilon
    return ProductDecomposition(c)


def decomposition_dm(dec: ProductDecomposition, dictionary: PauliDictionary = DICTIONARY) -> np.ndarray:
    """sum_ij w_ij P_i (x) P_j; its trace is sum_ij w_ij and is not renormalized."""
    w = dec.weights
    out = np.zeros((4, 4), dtype=complex)
    for i in range(6):
        for j in range(6):
            if w[i, j] != 0:
                out += w[i, j] * dictionary.product(i, j)
    return out


class DecompositionCheck(NamedTuple):
    max_abs_residual: float
    trace_deficit: float
    min_weight: float


def verify_decomposition(dec: ProductDecomposition, target, dictionary: PauliDictionary = DICTIONARY):
    t = target.entries if isinstance(target, DensityMatrix) else np.asarray(target)
    if t.shape != (4, 4):
        raise ValueError("decomposition target must be 4x4")
    w = dec.weights
    resid = float(np.max(np.abs(decomposition_dm(dec, dictionary) - t)))
    return DecompositionCheck(resid, float(w.sum() - 1.0), float(w.min()))


def _design_matrix(dictionary: PauliDictionary) -> np.ndarray:
    cols = []
    for i in range(6):
        for j in range(6):
            m = dictionary.product(i, j).reshape(-1)
            cols.append(np.concatenate([m.real, m.imag, [TRACE_ROW_WEIGHT]]))
    return np.array(cols).T


def solve_product_decomposition(target, dictionary: PauliDictionary = DICTIONARY) -> ProductDecomposition:
    """Nonnegative weights over the 36 products reproducing ``target``.

    Solved as NNLS over real and imaginary parts of all 16 entries, with the
    unit-trace condition appended as a heavily weighted row. Raises
    :class:`InfeasibleDecompositionError` when the converged residual
    exceeds 1e-8.
    """
    t = target.entries if isinstance(target, DensityMatrix) else np.asarray(target, dtype=complex)
    if t.shape != (4, 4):
        raise ValueError("decomposition target must be 4x4")
    a = _design_matrix(dictionary)
    flat = t.reshape(-1)
    b = np.concatenate([flat.real, flat.imag, [TRACE_ROW_WEIGHT]])
    w, _ = nnls(a, b, maxiter=50 * a.shape[1])
    w = _polish(a, b, w)
    dec = ProductDecomposition.from_weights(w)
    chk = verify_decomposition(dec, t, dictionary)
    worst = max(chk.max_abs_residual, abs(chk.trace_deficit))
    if worst > INFEASIBLE_TOL:
        raise InfeasibleDecompositionError(
            f"no nonnegative product decomposition (residual {worst:.3g})", worst
        )
    return dec


def _polish(a, b, w):
    # exact least squares on the active set removes NNLS's last-digit slop
    active = w > 0
    if not active.any():
        return w
    sol, *_ = np.linalg.lstsq(a[:, active], b, rcond=None)
    if np.all(sol >= 0):
        cand = np.zeros_like(w)
        cand[active] = sol
        if np.linalg.norm(a @ cand - b) <= np.linalg.norm(a @ w - b):
            return cand
    return w


def is_decomposable(target, dictionary: PauliDictionary = DICTIONARY) -> bool:
    try:
        solve_product_decomposition(target, dictionary)
    except InfeasibleDecompositionError:
        return False
    return True


def min_partial_transpose_eigenvalue(rho) -> float:
    """Smallest eigenvalue of rho^{T_B}; negative means entangled."""
    pt = partial_transpose(rho, sys=1, dims=(2, 2))
    return float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0])


def sigma_zz() -> Observable:
    """Per-molecule sigma_z (x) sigma_z; its ensemble sum is Sigma_zz."""
    return Observable(np.kron(SIGMA_Z, SIGMA_Z), "sigma_z(x)sigma_z")


# ---------------------------------------------------------------------------
# Compositions
# ---------------------------------------------------------------------------


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def effective_bell_composition(N: int, epsilon: float) -> Ensemble:
    """eps*N molecules in |phi+> and (1 - eps)*N/4 in each computational basis state."""
    n_bell = round_half_up(epsilon * N)
    n_each = round_half_up((1.0 - epsilon) * N / 4)
    entries = [(PHI_PLUS, n_bell)] + [(ket(b), n_each) for b in ("00", "01", "10", "11")]
    return Ensemble(entries)


def product_composition(dec: ProductDecomposition, N: int, dictionary: PauliDictionary = DICTIONARY) -> Ensemble:
    """Molecules in P_i (x) P_j with counts w_ij * N rounded half up."""
    w = dec.weights
    entries = []
    for i in range(6):
        for j in range(6):
            c = round_half_up(w[i, j] * N) if w[i, j] > 0 else 0
            if c:
                entries.append((dictionary.product_state(i, j), c))
    return Ensemble(entries)


@dataclass
class ComparisonReport:
    dm_a: DensityMatrix
    dm_b: DensityMatrix
    dm_max_abs_diff: float
    dm_tolerance: float
    analytic_a: float
    analytic_b: float
    mc_mean_a: float
    mc_mean_b: float
    mc_std_a: float
    mc_std_b: float
    trials: int
    reference_a: float = None
    reference_b: float = None

    @property
    def precondition_ok(self) -> bool:
        return self.dm_max_abs_diff <= self.dm_tolerance

    @property
    def oracle_agreement(self) -> tuple:
        """Relative |analytic - MC| / analytic for each side (0 when both vanish)."""
        out = []
        for an, mc in ((self.analytic_a, self.mc_std_a), (self.analytic_b, self.mc_std_b)):
            if an <= 1e-9:
                out.append(0.0 if mc <= 1e-9 else math.inf)
            else:
                out.append(abs(mc - an) / an)
        return tuple(out)

    @property
    def conformance(self) -> dict:
        return {
            "analytic_a": conformance(self.analytic_a, self.reference_a, "analytic"),
            "analytic_b": conformance(self.analytic_b, self.reference_b, "analytic"),
            "mc_std_a": conformance(self.mc_std_a, self.reference_a, "monte-carlo"),
            "mc_std_b": conformance(self.mc_std_b, self.reference_b, "monte-carlo"),
        }


def compare_compositions(
    a: Ensemble,
    b: Ensemble,
    omega,
    trials: int = 20_000,
    rng: RngStream = None,
    reference: tuple = (None, None),
    dm_tolerance: float = 1e-10,
    method: str = "auto",
    threads: int = 1,
) -> ComparisonReport:
    """Analytic and Monte Carlo global fluctuations of two compositions side by side."""
    if rng is None:
        rng = RngStream(0)
    dm_a, dm_b = compressed_dm(a), compressed_dm(b)
    diff = float(np.max(np.abs(dm_a.entries - dm_b.entries)))
    mean_a, std_a = empirical_global_stats(a, omega, trials, rng.substream(0), method, threads)
    mean_b, std_b = empirical_global_stats(b, omega, trials, rng.substream(1), method, threads)
    return ComparisonReport(
        dm_a,
        dm_b,
        diff,
        dm_tolerance,
        global_fluctuation(a, omega),
        global_fluctuation(b, omega),
        mean_a,
        mean_b,
        std_a,
        std_b,
        trials,
        reference[0],
        reference[1],
    )
