"""Pure-Python GF(2) row reduction on int bitsets (fallback for ``_gf2_ext``)."""

import numpy as np


def _pack(mat: np.ndarray) -> list:
    weights = [1 << j for j in range(mat.shape[1])]
    rows = []
    for r in mat:
        acc = 0
        for j in np.flatnonzero(r & 1):
            acc |= weights[j]
        rows.append(acc)
    return rows


def rref(mat):
    """Reduced row echelon form over GF(2).

    Returns ``(reduced, pivots)`` where ``reduced`` is a uint8 array of the
    input shape and ``pivots`` lists the pivot column of each nonzero row.
    """
    mat = np.asarray(mat, dtype=np.uint8)
    m, n = mat.shape
    rows = _pack(mat)
    pivots = []
    top = 0
    for col in range(n):
        if top >= m:
            break
        bit = 1 << col
        for r in range(top, m):
            if rows[r] & bit:
                break
        else:
            continue
        rows[top], rows[r] = rows[r], rows[top]
        prow = rows[top]
        for r in range(m):
            if r != top and rows[r] & bit:
                rows[r] ^= prow
        pivots.append(col)
        top += 1
    out = np.zeros((m, n), dtype=np.uint8)
    for i, row in enumerate(rows[:top]):
        j = 0
        while row:
            if row & 1:
                out[i, j] = 1
            row >>= 1
            j += 1
    return out, pivots
