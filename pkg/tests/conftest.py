import numpy as np
import pytest

from superdiff.lattice import build_folded_chain, folded_rung
from superdiff.model import FloquetSchedule, compile_program


def dense_kron(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    """Full 2^n matrix of single-site operators; site i is bit i (little endian)."""
    out = np.eye(1, dtype=complex)
    for site in reversed(range(n)):
        out = np.kron(out, ops.get(site, np.eye(2)))
    return out


def dense_two_site(u: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    """Embed a 4x4 gate (row index 2*b(q0) + b(q1)) into 2^n by brute force."""
    dim = 1 << n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        b0, b1 = (col >> q0) & 1, (col >> q1) & 1
        rest = col & ~(1 << q0) & ~(1 << q1)
        for r0 in range(2):
            for r1 in range(2):
                row = rest | (r0 << q0) | (r1 << q1)
                full[row, col] += u[2 * r0 + r1, 2 * b0 + b1]
    return full


@pytest.fixture
def small_program():
    def make(lam=(1, 1, 1), chain_len=7, distance=1, style="direct", steps=6, tau=1.0, ratio=1.0):
        spec = build_folded_chain(chain_len, [folded_rung(chain_len, distance)], style)
        return compile_program(spec, FloquetSchedule(tau, steps), 1.0, ratio, lam)
    return make


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
