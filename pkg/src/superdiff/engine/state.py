"""Statevector container, random probe-state preparation and program execution."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import unitary_group

from ..lattice import LAYER_ORDER, LatticeError, LatticeSpec, validate
from ..model import AXES, PAULI, Gate, TrotterProgram
from .kernels import apply_2q, apply_2q_parallel

_SQRT_HALF = 1 / np.sqrt(2)
# single-qubit states with <sigma_axis> = +1
PROBE_STATES = {
    "Z": np.array([1, 0], dtype=complex),
    "X": np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    "Y": np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex),
}


class EngineError(ValueError):
    pass


@dataclass
class StateVector:
    """``2**n`` amplitudes; site ``i`` is bit ``i`` of the index, |0> has sigma_z = +1."""

    n: int
    amplitudes: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "StateVector":
        amp = np.zeros(1 << n, dtype=np.complex128)
        amp[0] = 1.0
        return cls(n, amp)

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class RandomizationConfig:
    cycles: int = 9
    seed: int = 0
    realization_index: int = 0

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.realization_index,))
        return np.random.default_rng(ss)


def haar_unitaries(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` Haar-random U(4) matrices, shape ``(count, 4, 4)``."""
    if count == 0:
        return np.empty((0, 4, 4), dtype=np.complex128)
    u = unitary_group.rvs(4, size=count, random_state=rng)
    return np.asarray(u, dtype=np.complex128).reshape(count, 4, 4)


def _check_axis(axis: str) -> str:
    axis = axis.upper()
    if axis not in AXES:
        raise EngineError(f"axis must be one of {AXES}, got {axis!r}")
    return axis


def _check_targets(n: int, sites) -> tuple[int, int]:
    q0, q1 = (int(s) for s in sites)
    if q0 == q1:
        raise EngineError(f"gate targets must be distinct, got {sites}")
    if not (0 <= q0 < n and 0 <= q1 < n):
        raise EngineError(f"gate targets {sites} out of range for {n} qubits")
    return q0, q1


def apply_matrix(state: StateVector, u: np.ndarray, sites, parallel: bool = False) -> StateVector:
    q0, q1 = _check_targets(state.n, sites)
    kernel = apply_2q_parallel if parallel else apply_2q
    kernel(state.amplitudes, np.ascontiguousarray(u, dtype=np.complex128), q0, q1)
    return state


def apply_gate(state: StateVector, gate: Gate, parallel: bool = False) -> StateVector:
    """Apply ``gate`` in place and return the same state."""
    return apply_matrix(state, gate.matrix, gate.sites, parallel)


def apply_1q(state: StateVector, u: np.ndarray, site: int) -> StateVector:
    n = state.n
    psi = state.amplitudes.reshape(1 << (n - 1 - site), 2, 1 << site)
    state.amplitudes[:] = np.einsum("ab,ibj->iaj", u, psi).reshape(-1)
    return state


def prepare_probe_random_state(
    spec: LatticeSpec,
    axis: str = "Z",
    rc: RandomizationConfig = RandomizationConfig(),
    parallel: bool = False,
) -> StateVector:
    """Scramble all non-probe qubits, then put the probe in the +1 eigenstate of ``axis``.

    Each cycle draws one Haar U(4) per bond, layer by layer in R, G, B order.
    Gates on bonds touching the probe are drawn but not applied, so the random
    stream does not depend on the probe position.
    """
    axis = _check_axis(axis)
    if rc.cycles < 0:
        raise EngineError(f"cycles must be >= 0, got {rc.cycles}")
    problems = validate(spec)
    if problems:
        raise LatticeError("; ".join(problems))
    state = StateVector.zeros(spec.n)
    rng = rc.rng()
    layers = [spec.layer(layer) for layer in LAYER_ORDER]
    per_cycle = sum(len(bonds) for bonds in layers)
    for _ in range(rc.cycles):
        draws = haar_unitaries(rng, per_cycle)
        k = 0
        for bonds in layers:
            for bond in bonds:
                if spec.probe not in bond.sites:
                    apply_matrix(state, draws[k], bond.sites, parallel)
                k += 1
    if axis != "Z":
        # probe is still |0>; rotate it to the requested eigenstate
        v = PROBE_STATES[axis]
        u = np.array([[v[0], -np.conj(v[1])], [v[1], np.conj(v[0])]])
        apply_1q(state, u, spec.probe)
    return state


_PROBE_FLIP = {"Z": "X", "X": "Z", "Y": "Z"}


def flip_probe(state: StateVector, probe: int, axis: str = "Z") -> StateVector:
    """Map the probe's +1 eigenstate of ``axis`` to the -1 eigenstate, in place.

    Only valid while the probe is still in a product state with the rest.
    """
    axis = _check_axis(axis)
    return apply_1q(state, PAULI[_PROBE_FLIP[axis]], probe)


def run_program(
    state: StateVector,
    prog: TrotterProgram,
    hook: Callable[[int, StateVector], None] | None = None,
    parallel: bool = False,
) -> StateVector:
    """Evolve ``state`` in place through all steps of ``prog``.

    ``hook(N, state)`` is called once before the first step with ``N = 0`` and
    then after every completed step ``N = 1..steps``. Hooks must not mutate
    the state.
    """
    if prog.n != state.n:
        raise EngineError(f"program acts on {prog.n} qubits, state has {state.n}")
    kernel = apply_2q_parallel if parallel else apply_2q
    gates = [(np.ascontiguousarray(g.matrix), *_check_targets(state.n, g.sites)) for g in prog.step_gates]
    psi = state.amplitudes
    if hook is not None:
        hook(0, state)
    for step in range(1, prog.steps + 1):
        for u, q0, q1 in gates:
            kernel(psi, u, q0, q1)
        if hook is not None:
            hook(step, state)
    return state


def _z_site(prob: np.ndarray, n: int, site: int) -> float:
    p = prob.reshape(1 << (n - 1 - site), 2, 1 << site)
    return float(p[:, 0, :].sum() - p[:, 1, :].sum())


def expect_pauli(state: StateVector, site: int, axis: str = "Z") -> float:
    """``<psi| sigma_axis(site) |psi>``."""
    axis = _check_axis(axis)
    n = state.n
    if not 0 <= site < n:
        raise EngineError(f"site {site} out of range for {n} qubits")
    if axis == "Z":
        prob = state.amplitudes.real ** 2 + state.amplitudes.imag ** 2
        return _z_site(prob, n, site)
    psi = state.amplitudes.reshape(1 << (n - 1 - site), 2, 1 << site)
    overlap = np.vdot(psi[:, 0, :], psi[:, 1, :])
    return float(2 * overlap.real if axis == "X" else 2 * overlap.imag)


def z_profile(state: StateVector) -> np.ndarray:
    """``<sigma_z>`` on every site; entry ``i`` is bitwise equal to ``expect_pauli(state, i)``."""
    prob = state.amplitudes.real ** 2 + state.amplitudes.imag ** 2
    return np.array([_z_site(prob, state.n, i) for i in range(state.n)])
