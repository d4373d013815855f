"""Exact simulation of parity, fanout and Mod_q gates built from Heisenberg evolution."""

from .circuits import (
    ConstraintError,
    ModqCircuitSpec,
    ParityCircuitSpec,
    build_fanout_circuit,
    build_generalized_modq_circuit,
    build_parity_circuit,
    build_standard_modq_circuit,
)
from .constraints import ModqPlan, TimingPlan, cfg_a, cfg_b
from .encoding import BitString, eigen_data, encode_bitstring, lambda_closed_form
from .engine import Circuit, Gate, circuit_unitary, equal_up_to_global_phase, simulate
from .oracles import compare_with_oracle, fanout_oracle, modq_oracle, parity_oracle
from .spin_hamiltonian import CouplingMatrix, PairLayout, build_hamiltonian, build_j_squared_swap

__all__ = [
    "BitString",
    "Circuit",
    "ConstraintError",
    "CouplingMatrix",
    "Gate",
    "ModqCircuitSpec",
    "ModqPlan",
    "PairLayout",
    "ParityCircuitSpec",
    "TimingPlan",
    "build_fanout_circuit",
    "build_generalized_modq_circuit",
    "build_hamiltonian",
    "build_j_squared_swap",
    "build_parity_circuit",
    "build_standard_modq_circuit",
    "cfg_a",
    "cfg_b",
    "circuit_unitary",
    "compare_with_oracle",
    "eigen_data",
    "encode_bitstring",
    "equal_up_to_global_phase",
    "fanout_oracle",
    "lambda_closed_form",
    "modq_oracle",
    "parity_oracle",
    "simulate",
]
