"""Native-gate circuit for a two-site coupling propagator.

Three CNOTs plus single-qubit rotations reproduce
``exp(-i J (lx XX + ly YY + lz ZZ) t / 4)`` up to a global phase. The
simulator does not use this path; it exists to cross-check the exact
propagators.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import PAULI, Coupling

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def rx(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * PAULI["X"]


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def phase(phi: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * phi)])


@dataclass(frozen=True)
class ElementaryGate:
    name: str
    qubits: tuple[int, ...]  # 0 = control wire, 1 = target wire
    angle: float | None = None

    def matrix(self) -> np.ndarray:
        if self.name == "cx":
            return _CNOT
        if self.name == "h":
            return _H
        return {"rx": rx, "rz": rz, "p": phase}[self.name](self.angle)


def decompose_propagator(c: Coupling, tau: float) -> list[ElementaryGate]:
    lx, ly, lz = (c.strength * v * tau / 2 for v in c.vector)
    return [
        ElementaryGate("cx", (0, 1)),
        ElementaryGate("rx", (0,), lx),
        ElementaryGate("rz", (1,), lz),
        ElementaryGate("h", (0,)),
        ElementaryGate("cx", (0, 1)),
        ElementaryGate("p", (0,), -np.pi / 2),
        ElementaryGate("rz", (1,), -ly),
        ElementaryGate("h", (0,)),
        ElementaryGate("cx", (0, 1)),
        ElementaryGate("rx", (0,), np.pi / 2),
        ElementaryGate("rx", (1,), -np.pi / 2),
    ]


def compose(gates: list[ElementaryGate]) -> np.ndarray:
    """Multiply a two-wire gate list into a 4x4 matrix (wire 0 is the left kron factor)."""
    u = np.eye(4, dtype=complex)
    for g in gates:
        m = g.matrix()
        if len(g.qubits) == 1:
            m = np.kron(m, np.eye(2)) if g.qubits[0] == 0 else np.kron(np.eye(2), m)
        u = m @ u
    return u


def phase_aligned_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """Max elementwise ``|a - e^{i phi} b|`` with ``phi`` the best-fit global phase."""
    inner = np.vdot(b, a)
    ph = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.max(np.abs(a - ph * b)))
