"""Scenario report record and reference-value conformance flags."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

ORACLES = ("analytic", "monte-carlo", "exhaustive")

# relative tolerance for calling a computed value a match with a printed one
ANALYTIC_MATCH_RTOL = 1e-6
MONTE_CARLO_MATCH_RTOL = 0.05
ABS_FLOOR = 1e-9


def conformance(value: float, reference, oracle: str) -> str:
    if reference is None:
        return "no-reference"
    rtol = MONTE_CARLO_MATCH_RTOL if oracle == "monte-carlo" else ANALYTIC_MATCH_RTOL
    tol = max(ABS_FLOOR, rtol * abs(reference))
    return "match" if abs(value - reference) <= tol else "mismatch"


@dataclass
class ScenarioReport:
    scenario_id: str
    parameters: dict
    seed: int
    computed: dict = field(default_factory=dict)
    oracles: dict = field(default_factory=dict)
    paper_reference_values: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add(self, name: str, value, oracle: str, paper=None) -> None:
        if oracle not in ORACLES:
            raise ValueError(f"unknown oracle {oracle!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"{name} is not finite")
        self.computed[name] = value
        self.oracles[name] = oracle
        if paper is not None:
            self.paper_reference_values[name] = float(paper)

    def add_matrix(self, prefix: str, m, oracle: str = "analytic") -> None:
        """Record the real and imaginary parts of every entry of a small matrix."""
        for r in range(m.shape[0]):
            for c in range(m.shape[1]):
                self.add(f"{prefix}_{r}{c}_re", m[r, c].real, oracle)
                self.add(f"{prefix}_{r}{c}_im", m[r, c].imag, oracle)

    @property
    def conformance(self) -> dict:
        return {
            k: conformance(v, self.paper_reference_values.get(k), self.oracles[k])
            for k, v in self.computed.items()
        }

    def to_record(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "parameters": dict(self.parameters),
            "seed": self.seed,
            "computed": dict(self.computed),
            "oracles": dict(self.oracles),
            "paper_reference_values": dict(self.paper_reference_values),
            "conformance": self.conformance,
            "notes": list(self.notes),
        }
