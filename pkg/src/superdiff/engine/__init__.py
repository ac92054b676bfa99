"""Statevector simulation engine."""
from .decompose import ElementaryGate, compose, decompose_propagator, phase_aligned_deviation
from .kernels import set_threads
from .oracle import ORACLE_MAX_QUBITS, dense_trace_correlator
from .state import (
    EngineError,
    RandomizationConfig,
    StateVector,
    apply_gate,
    apply_matrix,
    expect_pauli,
    flip_probe,
    haar_unitaries,
    prepare_probe_random_state,
    run_program,
    z_profile,
)

__all__ = [
    "ElementaryGate",
    "EngineError",
    "ORACLE_MAX_QUBITS",
    "RandomizationConfig",
    "StateVector",
    "apply_gate",
    "apply_matrix",
    "compose",
    "decompose_propagator",
    "dense_trace_correlator",
    "expect_pauli",
    "flip_probe",
    "haar_unitaries",
    "phase_aligned_deviation",
    "prepare_probe_random_state",
    "run_program",
    "set_threads",
    "z_profile",
]
