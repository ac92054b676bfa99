"""Exact infinite-temperature correlators by evolving a full basis.

Computes ``Tr[sigma_a^i(t) sigma_a^p(0)] / 2^n`` with plain numpy tensor
contractions, independent of the numba kernels and of random-state sampling.
Cost is ``2^n`` statevector evolutions, so it is limited to small systems.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..model import AXES, TrotterProgram

ORACLE_MAX_QUBITS = 12


def _apply_batch(t: np.ndarray, u4: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    # bit q lives on tensor axis n-1-q; trailing axis is the batch
    a0, a1 = n - 1 - q0, n - 1 - q1
    out = np.tensordot(u4, t, axes=([2, 3], [a0, a1]))
    return np.moveaxis(out, [0, 1], [a0, a1])


def _pauli_rows(t: np.ndarray, site: int, axis: str, n: int) -> np.ndarray:
    """Apply sigma_axis on ``site`` to each batch column."""
    ax = n - 1 - site
    t0 = np.take(t, 0, axis=ax)
    t1 = np.take(t, 1, axis=ax)
    if axis == "Z":
        parts = (t0, -t1)
    elif axis == "X":
        parts = (t1, t0)
    else:
        parts = (-1j * t1, 1j * t0)
    return np.stack(parts, axis=ax)


def dense_trace_correlator(
    prog: TrotterProgram,
    sites: int | Sequence[int] | None = None,
    probe: int | None = None,
    axis: str = "Z",
    max_qubits: int = ORACLE_MAX_QUBITS,
    chunk: int = 256,
) -> np.ndarray:
    """Exact correlator at every step ``0..prog.steps``.

    Returns shape ``(steps + 1,)`` for a single ``sites`` entry (default: the
    probe) or ``(steps + 1, len(sites))`` for a sequence.
    """
    n = prog.n
    if n > max_qubits:
        raise ValueError(f"dense oracle limited to {max_qubits} qubits, got {n}")
    axis = axis.upper()
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    probe = prog.lattice.probe if probe is None else int(probe)
    scalar = sites is None or np.isscalar(sites)
    site_list = [probe if sites is None else int(sites)] if scalar else [int(s) for s in sites]

    dim = 1 << n
    pbit = 1 << probe
    idx = np.arange(dim)
    low = idx[(idx & pbit) == 0]
    gates = [(g.matrix.reshape(2, 2, 2, 2), *g.sites) for g in prog.step_gates]
    acc = np.zeros((prog.steps + 1, len(site_list)))

    for start in range(0, low.size, chunk):
        cols = low[start:start + chunk]
        k = cols.size
        basis = np.concatenate([cols, cols | pbit])
        # sigma_p |b> = coeff * |partner(b)>, partner lies in the same chunk
        if axis == "Z":
            partner = np.arange(2 * k)
            coeff = np.concatenate([np.ones(k), -np.ones(k)]).astype(complex)
        else:
            partner = np.concatenate([np.arange(k, 2 * k), np.arange(k)])
            if axis == "X":
                coeff = np.ones(2 * k, dtype=complex)
            else:
                coeff = np.concatenate([1j * np.ones(k), -1j * np.ones(k)])
        phi = np.zeros((dim, 2 * k), dtype=complex)
        phi[basis, np.arange(2 * k)] = 1.0
        phi = phi.reshape((2,) * n + (2 * k,))
        for step in range(prog.steps + 1):
            if step > 0:
                for u4, q0, q1 in gates:
                    phi = _apply_batch(phi, u4, q0, q1, n)
            flat = phi.reshape(dim, 2 * k)
            chi = flat[:, partner] * coeff
            for j, site in enumerate(site_list):
                s_chi = _pauli_rows(chi.reshape(phi.shape), site, axis, n).reshape(dim, 2 * k)
                acc[step, j] += np.vdot(flat, s_chi).real
    acc /= dim
    return acc[:, 0] if scalar else acc
