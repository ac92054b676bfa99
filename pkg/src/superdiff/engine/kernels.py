"""Numba kernels for applying two-qubit gates to a little-endian statevector.

Site ``q`` is bit ``q`` of the amplitude index. The 4x4 matrix row/column
index is ``2 * bit(q0) + bit(q1)``. Each kernel touches disjoint amplitude
quadruples, so the parallel variant is bit-identical to the serial one.
"""
import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@njit(inline="always")
def _insert_zero_bits(k, lo, hi):
    k = ((k >> lo) << (lo + 1)) | (k & ((1 << lo) - 1))
    k = ((k >> hi) << (hi + 1)) | (k & ((1 << hi) - 1))
    return k


@njit(inline="always")
def _apply_quad(psi, u, base, b0, b1):
    i00 = base
    i01 = base | b1
    i10 = base | b0
    i11 = base | b0 | b1
    a0 = psi[i00]
    a1 = psi[i01]
    a2 = psi[i10]
    a3 = psi[i11]
    psi[i00] = u[0, 0] * a0 + u[0, 1] * a1 + u[0, 2] * a2 + u[0, 3] * a3
    psi[i01] = u[1, 0] * a0 + u[1, 1] * a1 + u[1, 2] * a2 + u[1, 3] * a3
    psi[i10] = u[2, 0] * a0 + u[2, 1] * a1 + u[2, 2] * a2 + u[2, 3] * a3
    psi[i11] = u[3, 0] * a0 + u[3, 1] * a1 + u[3, 2] * a2 + u[3, 3] * a3


@njit(nogil=True, cache=True)
def apply_2q(psi, u, q0, q1):
    lo = min(q0, q1)
    hi = max(q0, q1)
    b0 = np.int64(1) << q0
    b1 = np.int64(1) << q1
    for k in range(psi.shape[0] >> 2):
        _apply_quad(psi, u, _insert_zero_bits(np.int64(k), lo, hi), b0, b1)


@njit(nogil=True, parallel=True, cache=True)
def apply_2q_parallel(psi, u, q0, q1):
    lo = min(q0, q1)
    hi = max(q0, q1)
    b0 = np.int64(1) << q0
    b1 = np.int64(1) << q1
    for k in prange(psi.shape[0] >> 2):
        _apply_quad(psi, u, _insert_zero_bits(np.int64(k), lo, hi), b0, b1)


def set_threads(threads: int | None) -> int:
    """Cap the worker count of the parallel kernel; returns the count in use."""
    if threads is not None:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()
