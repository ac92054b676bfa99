"""Two-site couplings, Floquet schedule and compilation into gate programs.

A rung or chain bond carries ``strength * (lx XX + ly YY + lz ZZ) / 4``. One
Floquet step applies the propagators of layer R, then G, then B.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .lattice import LAYER_ORDER, Bond, BondKind, LatticeError, LatticeSpec, Layer, validate

I2 = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
AXES = ("X", "Y", "Z")
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class InteractionVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in self):
            raise ValueError(f"interaction vector must be finite, got {tuple(self)}")

    def __iter__(self) -> Iterator[float]:
        return iter((self.x, self.y, self.z))

    @classmethod
    def parse(cls, value) -> "InteractionVector":
        """Accept an InteractionVector, a 3-sequence, or a string like ``"1,0,1"``."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            value = value.strip("()[] ").replace(" ", "").split(",")
        x, y, z = (float(v) for v in value)
        return cls(x, y, z)

    def label(self) -> str:
        return "(" + ",".join(f"{v:g}" for v in self) + ")"


ISOTROPIC = InteractionVector(1.0, 1.0, 1.0)
ZERO = InteractionVector(0.0, 0.0, 0.0)

# the interaction types studied for zz correlations
STUDIED_TYPES = tuple(
    InteractionVector(*v) for v in [(0, 0, 1), (1, 0, 0), (1, 1, 0), (1, 0, 1), (1, 1, 1)]
)


@dataclass(frozen=True)
class Coupling:
    strength: float
    vector: InteractionVector = ISOTROPIC


@dataclass(frozen=True)
class FloquetSchedule:
    tau: float = 1.0
    steps: int = 20
    layer_order: tuple[Layer, ...] = LAYER_ORDER

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if tuple(self.layer_order) != LAYER_ORDER:
            raise ValueError("layer order must be R, G, B")

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.steps + 1)


def two_site_generator(c: Coupling) -> np.ndarray:
    """Hermitian 4x4 matrix ``strength * sum_a l_a sigma_a sigma_a / 4``."""
    lam = c.vector
    h = lam.x * np.kron(PAULI["X"], PAULI["X"])
    h = h + lam.y * np.kron(PAULI["Y"], PAULI["Y"])
    h = h + lam.z * np.kron(PAULI["Z"], PAULI["Z"])
    return c.strength * h / 4


def propagator(c: Coupling, tau: float) -> np.ndarray:
    """``exp(-i h tau)`` via the spectral decomposition of the generator."""
    h = two_site_generator(c)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * tau)) @ v.conj().T


@dataclass(frozen=True)
class Gate:
    """A 4x4 unitary acting on ``sites``; row index is ``2*bit(sites[0]) + bit(sites[1])``."""

    sites: tuple[int, int]
    matrix: np.ndarray = field(repr=False)
    layer: Layer | None = None

    def __post_init__(self):
        if self.matrix.shape != (4, 4):
            raise ValueError(f"gate matrix must be 4x4, got {self.matrix.shape}")


@dataclass(frozen=True)
class TrotterProgram:
    """The gates of one Floquet step, repeated ``schedule.steps`` times."""

    lattice: LatticeSpec
    schedule: FloquetSchedule
    step_gates: tuple[Gate, ...]
    chain_coupling: Coupling
    rung_coupling: Coupling

    @property
    def n(self) -> int:
        return self.lattice.n

    @property
    def steps(self) -> int:
        return self.schedule.steps

    def __len__(self) -> int:
        return self.steps * len(self.step_gates)

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "probe": self.lattice.probe,
            "tau": self.schedule.tau,
            "steps": self.steps,
            "J": self.chain_coupling.strength,
            "J_perp": self.rung_coupling.strength,
            "lambda": list(self.rung_coupling.vector),
        }


def compile_program(
    spec: LatticeSpec,
    sched: FloquetSchedule,
    chain_J: float = 1.0,
    rung_Jperp: float = 1.0,
    rung_lambda: InteractionVector | None = None,
) -> TrotterProgram:
    """Compile a lattice and schedule into per-step gates ordered R, G, B."""
    problems = validate(spec)
    if problems:
        raise LatticeError("; ".join(problems))
    rung_lambda = ISOTROPIC if rung_lambda is None else InteractionVector.parse(rung_lambda)
    chain = Coupling(float(chain_J), ISOTROPIC)
    rung = Coupling(float(rung_Jperp), rung_lambda)
    u_chain = propagator(chain, sched.tau)
    u_rung = propagator(rung, sched.tau)

    gates: list[Gate] = []
    for layer in sched.layer_order:
        touched: set[int] = set()
        for bond in spec.layer(layer):
            if touched & set(bond.sites):
                raise LatticeError(f"layer {layer.value} gates overlap at bond {bond.sites}")
            touched.update(bond.sites)
            u = u_chain if bond.kind == BondKind.CHAIN else u_rung
            gates.append(Gate(bond.sites, u, layer))
    return TrotterProgram(spec, sched, tuple(gates), chain, rung)


# -- symmetry ------------------------------------------------------------

def equivalent_experiments(
    lam: InteractionVector, axis: str = "Z"
) -> list[tuple[InteractionVector, str]]:
    """All ``(lambda', axis')`` labels giving the same autocorrelator.

    The chain is isotropic, so any relabeling of the Pauli axes (realized by a
    global single-qubit Clifford, with sign flips that cancel in bilinear terms)
    maps an experiment onto an equivalent one. The orbit includes the input.
    """
    lam = InteractionVector.parse(lam)
    axis = axis.upper()
    comps = dict(zip(AXES, lam))
    out: list[tuple[InteractionVector, str]] = []
    for perm in itertools.permutations(AXES):
        relabel = dict(zip(AXES, perm))  # old axis -> new axis
        new = {relabel[a]: comps[a] for a in AXES}
        item = (InteractionVector(new["X"], new["Y"], new["Z"]), relabel[axis])
        if item not in out:
            out.append(item)
    return out


@dataclass(frozen=True)
class SymmetryFlags:
    conserves_total_sz: bool
    conserves_parity: bool


def _comm_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a @ b - b @ a))


def symmetry_flags(rung_lambda: InteractionVector, tol: float = 1e-12) -> SymmetryFlags:
    """Check total-Sz and x-parity conservation by explicit two-site commutators.

    Both charges are sums/products of single-site terms, so a bond term
    commutes with the global charge iff it commutes with the two-site part.
    """
    rung = two_site_generator(Coupling(1.0, InteractionVector.parse(rung_lambda)))
    chain = two_site_generator(Coupling(1.0, ISOTROPIC))
    sz = np.kron(PAULI["Z"], I2) + np.kron(I2, PAULI["Z"])
    px = np.kron(PAULI["X"], PAULI["X"])
    return SymmetryFlags(
        conserves_total_sz=_comm_norm(sz, rung) < tol and _comm_norm(sz, chain) < tol,
        conserves_parity=_comm_norm(px, rung) < tol and _comm_norm(px, chain) < tol,
    )
