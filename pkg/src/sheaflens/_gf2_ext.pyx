# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""GF(2) row reduction on rows packed into 64-bit words."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint64_t

cnp.import_array()


def rref(mat):
    """Reduced row echelon form over GF(2); same contract as ``_gf2_py.rref``."""
    cdef cnp.ndarray[uint8_t, ndim=2] src = np.ascontiguousarray(mat, dtype=np.uint8)
    cdef Py_ssize_t m = src.shape[0]
    cdef Py_ssize_t n = src.shape[1]
    cdef Py_ssize_t words = (n + 63) // 64
    if words == 0:
        words = 1
    packed = np.zeros((m, words), dtype=np.uint64)
    cdef uint64_t[:, ::1] P = packed
    cdef Py_ssize_t i, j, r, w, col, top = 0
    cdef uint64_t bit, tmp
    for i in range(m):
        for j in range(n):
            if src[i, j] & 1:
                P[i, j >> 6] |= (<uint64_t>1) << (j & 63)

    pivots = []
    for col in range(n):
        if top >= m:
            break
        w = col >> 6
        bit = (<uint64_t>1) << (col & 63)
        r = top
        while r < m and not (P[r, w] & bit):
            r += 1
        if r == m:
            continue
        if r != top:
            for j in range(w, words):
                tmp = P[r, j]
                P[r, j] = P[top, j]
                P[top, j] = tmp
        for r in range(m):
            if r != top and (P[r, w] & bit):
                for j in range(w, words):
                    P[r, j] ^= P[top, j]
        pivots.append(col)
        top += 1

    out = np.zeros((m, n), dtype=np.uint8)
    cdef uint8_t[:, ::1] O = out
    for i in range(top):
        for j in range(n):
            if (P[i, j >> 6] >> (j & 63)) & 1:
                O[i, j] = 1
    return out, pivots
