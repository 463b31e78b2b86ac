"""Quantum ensembles as explicit compositions: compressed, full and reduced
density matrices, global-measurement fluctuations, and seeded Monte Carlo
checks of every quantity."""

from .ensemble import (
    CompositionReport,
    Ensemble,
    composition_report,
    compressed_dm,
    full_state,
    global_expectation,
    global_fluctuation,
    per_state_variance,
    same_composition,
    sampling_expectation,
)
from .measurement import (
    MeasurementRecord,
    bell_basis_measure,
    empirical_global_stats,
    measure_ensemble,
    measure_pairs_remote,
    measure_state,
)
from .qmath import (
    DensityMatrix,
    Observable,
    StateVector,
    apply_unitary,
    expectation,
    outer,
    partial_trace,
    spectral_decompose,
    tensor_product,
)
from .report import ScenarioReport
from .rng import RngStream

__version__ = "0.1.0"
