"""Exact linear algebra over GF(2) and the rationals.

Matrices over GF(2) are ``uint8`` arrays; over the rationals they are numpy
object arrays of :class:`fractions.Fraction`. Everything downstream goes
through :func:`get_field` so callers never branch on the field.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import gf2


class GF2:
    name = "f2"
    dtype = np.uint8

    def asarray(self, data) -> np.ndarray:
        return (np.asarray(data, dtype=np.int64) % 2).astype(np.uint8)

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.uint8)

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=np.uint8)

    def matmul(self, a, b) -> np.ndarray:
        if a.shape[1] == 0:
            return self.zeros((a.shape[0], b.shape[1]))
        return ((a.astype(np.int64) @ b.astype(np.int64)) % 2).astype(np.uint8)

    def rref(self, m):
        return gf2.rref(m)

    def sign(self, s: int):
        return 1

    def __repr__(self) -> str:
        return "GF2()"


class Rationals:
    name = "q"
    dtype = object

    def asarray(self, data) -> np.ndarray:
        arr = np.asarray(data, dtype=object)
        out = np.empty(arr.shape, dtype=object)
        for idx, x in np.ndenumerate(arr):
            out[idx] = Fraction(x)
        return out

    def zeros(self, shape) -> np.ndarray:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out

    def eye(self, n: int) -> np.ndarray:
        out = self.zeros((n, n))
        for i in range(n):
            out[i, i] = Fraction(1)
        return out

    def matmul(self, a, b) -> np.ndarray:
        out = self.zeros((a.shape[0], b.shape[1]))
        if a.shape[1] == 0:
            return out
        for i in range(a.shape[0]):
            row = a[i]
            nz = [k for k in range(a.shape[1]) if row[k] != 0]
            for j in range(b.shape[1]):
                acc = Fraction(0)
                for k in nz:
                    if b[k, j] != 0:
                        acc += row[k] * b[k, j]
                out[i, j] = acc
        return out

    def rref(self, m):
        r = [list(row) for row in m]
        rows = len(r)
        cols = m.shape[1]
        pivots = []
        top = 0
        for col in range(cols):
            if top >= rows:
                break
            piv = next((i for i in range(top, rows) if r[i][col] != 0), None)
            if piv is None:
                continue
            r[top], r[piv] = r[piv], r[top]
            inv = 1 / r[top][col]
            r[top] = [x * inv for x in r[top]]
            prow = r[top]
            for i in range(rows):
                if i != top and r[i][col] != 0:
                    f = r[i][col]
                    r[i] = [x - f * y for x, y in zip(r[i], prow)]
            pivots.append(col)
            top += 1
        out = self.zeros((rows, cols))
        for i in range(rows):
            for j in range(cols):
                out[i, j] = r[i][j]
        return out, pivots

    def sign(self, s: int):
        return Fraction(s)

    def __repr__(self) -> str:
        return "Rationals()"


_FIELDS = {"f2": GF2(), "q": Rationals()}


def get_field(field) -> GF2 | Rationals:
    if isinstance(field, (GF2, Rationals)):
        return field
    key = str(field).lower()
    if key in ("gf2", "z2", "f_2"):
        key = "f2"
    if key in ("qq", "rational", "rationals"):
        key = "q"
    try:
        return _FIELDS[key]
    except KeyError:
        raise ValueError(f"unknown field {field!r}; use 'f2' or 'q'") from None


def rank(m, field) -> int:
    field = get_field(field)
    m = field.asarray(m)
    if m.size == 0:
        return 0
    return len(field.rref(m)[1])


def nullspace(m, field) -> np.ndarray:
    """Columns form a basis of the kernel of ``m``."""
    field = get_field(field)
    m = field.asarray(m)
    n = m.shape[1]
    if m.shape[0] == 0:
        return field.eye(n)
    r, pivots = field.rref(m)
    free = [j for j in range(n) if j not in set(pivots)]
    basis = field.zeros((n, len(free)))
    for k, f in enumerate(free):
        basis[f, k] = 1 if field.name == "f2" else Fraction(1)
        for i, p in enumerate(pivots):
            if r[i, f] != 0:
                basis[p, k] = r[i, f] if field.name == "f2" else -r[i, f]
    return basis


def column_basis(m, field) -> np.ndarray:
    """Independent columns of ``m`` spanning its column space."""
    if m.shape[1] == 0 or m.shape[0] == 0:
        return field.zeros((m.shape[0], 0))
    _, pivots = field.rref(m)
    return m[:, pivots]


def extend_basis(base, candidates, field) -> np.ndarray:
    """Columns of ``candidates`` completing the independent columns ``base``."""
    k = base.shape[1]
    stacked = np.concatenate([base, candidates], axis=1)
    if stacked.shape[0] == 0 or stacked.shape[1] == 0:
        return candidates[:, :0]
    _, pivots = field.rref(stacked)
    chosen = [p - k for p in pivots if p >= k]
    return candidates[:, chosen]


def solve(basis, targets, field) -> np.ndarray:
    """``x`` with ``basis @ x == targets`` for independent basis columns.

    Raises ``ValueError`` when a target is outside the span.
    """
    k = basis.shape[1]
    t = targets.shape[1]
    if k == 0:
        if np.any(targets != 0):
            raise ValueError("target outside the span of an empty basis")
        return field.zeros((0, t))
    r, pivots = field.rref(np.concatenate([basis, targets], axis=1))
    if pivots[:k] != list(range(k)):
        raise ValueError("basis columns are not independent")
    if len(pivots) > k:
        raise ValueError("target outside the span of the basis")
    return r[:k, k:].copy()
