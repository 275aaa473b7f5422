"""Pseudometric stalks and the maps between them.

Three stalk kinds are supported: Euclidean spaces under the sup or the
Euclidean norm, finite tables with an explicit distance matrix, and the one
point space. Maps are linear (matrix), lookup tables, or the collapse onto
the one point space. The same map classes serve as restriction maps and as
morphism components, so every Lipschitz constant comes from one place.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .errors import StalkShapeMismatch

#: Multiplicative slack applied to floating-point operator norms so the
#: reported constant is an upper bound.
NORM_SAFETY = 1e-9


class Euclidean:
    kind = "euclidean"

    def __init__(self, dim: int, metric: str = "linf"):
        if dim < 1:
            raise StalkShapeMismatch("Euclidean stalks need dimension >= 1")
        metric = metric.lower()
        if metric not in ("linf", "l2"):
            raise ValueError(f"unknown metric {metric!r}")
        self.dim = int(dim)
        self.metric = metric

    def __repr__(self) -> str:
        return f"Euclidean({self.dim}, {self.metric!r})"

    def __eq__(self, other):
        return isinstance(other, Euclidean) and (self.dim, self.metric) == (other.dim, other.metric)

    def __hash__(self):
        return hash((self.kind, self.dim, self.metric))

    def element(self, value) -> np.ndarray:
        x = np.asarray(value, dtype=float).reshape(-1)
        if x.shape != (self.dim,):
            raise StalkShapeMismatch(f"expected a vector of length {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise StalkShapeMismatch("stalk values must be finite")
        return x

    def distance(self, x, y) -> float:
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.metric == "linf":
            return float(np.max(np.abs(diff)))
        return float(np.sqrt(diff @ diff))

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim)

    def to_dict(self) -> dict:
        return {"kind": "euclidean", "dim": self.dim, "metric": self.metric}


class FiniteTable:
    kind = "table"

    def __init__(self, labels: Sequence[str], distances, check: bool = True):
        self.labels = tuple(str(x) for x in labels)
        self.matrix = np.asarray(distances, dtype=float)
        n = len(self.labels)
        if self.matrix.shape != (n, n):
            raise StalkShapeMismatch("distance matrix shape does not match the labels")
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if check:
            self._check()

    def _check(self) -> None:
        d = self.matrix
        if np.any(np.diag(d) != 0):
            raise ValueError("distance table must vanish on the diagonal")
        if np.any(d < 0) or not np.array_equal(d, d.T):
            raise ValueError("distance table must be symmetric and nonnegative")
        # d[i,k] <= d[i,j] + d[j,k] for all triples
        slack = d[:, None, :] - (d[:, :, None] + d[None, :, :])
        if np.any(slack > 1e-12):
            i, j, k = np.argwhere(slack > 1e-12)[0]
            raise ValueError(
                f"triangle inequality fails: d({self.labels[i]},{self.labels[k]}) > "
                f"d({self.labels[i]},{self.labels[j]}) + d({self.labels[j]},{self.labels[k]})"
            )

    def __repr__(self) -> str:
        return f"FiniteTable({list(self.labels)})"

    def __eq__(self, other):
        return (
            isinstance(other, FiniteTable)
            and self.labels == other.labels
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.kind, self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    def element(self, value) -> int:
        if isinstance(value, str):
            if value not in self.index:
                raise StalkShapeMismatch(f"{value!r} is not an element of {self!r}")
            return self.index[value]
        i = int(value)
        if not 0 <= i < len(self.labels):
            raise StalkShapeMismatch(f"element index {i} out of range")
        return i

    def distance(self, x, y) -> float:
        return float(self.matrix[x, y])

    def zero(self) -> int:
        return 0

    def to_dict(self) -> dict:
        return {"kind": "table", "labels": list(self.labels), "distances": self.matrix.tolist()}


class OnePoint:
    kind = "point"

    def __repr__(self) -> str:
        return "OnePoint()"

    def __eq__(self, other):
        return isinstance(other, OnePoint)

    def __hash__(self):
        return hash(self.kind)

    def element(self, value=None):
        return None

    def distance(self, x, y) -> float:
        return 0.0

    def zero(self):
        return None

    def to_dict(self) -> dict:
        return {"kind": "point"}


def stalk_from_dict(spec: dict):
    kind = spec.get("kind", "euclidean")
    if kind == "euclidean":
        return Euclidean(int(spec["dim"]), spec.get("metric", "linf"))
    if kind == "table":
        return FiniteTable(spec["labels"], spec["distances"])
    if kind == "point":
        return OnePoint()
    raise StalkShapeMismatch(f"unknown stalk kind {kind!r}")


# -- maps ---------------------------------------------------------------------


class MatrixMap:
    """Linear map between Euclidean stalks, ``x -> M @ x``."""

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))

    def __repr__(self) -> str:
        return f"MatrixMap({self.matrix.tolist()})"

    def apply(self, x):
        return self.matrix @ x

    def check(self, source, target) -> None:
        if not (isinstance(source, Euclidean) and isinstance(target, Euclidean)):
            raise StalkShapeMismatch("matrix maps run between Euclidean stalks")
        if self.matrix.shape != (target.dim, source.dim):
            raise StalkShapeMismatch(
                f"matrix shape {self.matrix.shape} does not map R^{source.dim} to R^{target.dim}"
            )

    def lipschitz(self, source, target) -> float:
        return operator_norm(self.matrix, source.metric, target.metric)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist()}


class TableMap:
    """Lookup-table map between finite table stalks."""

    def __init__(self, table: Sequence[int]):
        self.table = tuple(int(t) for t in table)

    def __repr__(self) -> str:
        return f"TableMap({list(self.table)})"

    def apply(self, x):
        return self.table[x]

    def check(self, source, target) -> None:
        if not (isinstance(source, FiniteTable) and isinstance(target, FiniteTable)):
            raise StalkShapeMismatch("table maps run between finite table stalks")
        if len(self.table) != len(source) or any(not 0 <= t < len(target) for t in self.table):
            raise StalkShapeMismatch("lookup table does not map the source carrier into the target")

    def lipschitz(self, source, target) -> float:
        best = 0.0
        n = len(self.table)
        for i in range(n):
            for j in range(i + 1, n):
                out = target.matrix[self.table[i], self.table[j]]
                if out == 0:
                    continue
                d = source.matrix[i, j]
                if d == 0:
                    return math.inf
                best = max(best, out / d)
        return float(best)

    def to_dict(self) -> dict:
        return {"table": list(self.table)}


class CollapseMap:
    """The unique map onto the one point space."""

    def __repr__(self) -> str:
        return "CollapseMap()"

    def apply(self, x):
        return None

    def check(self, source, target) -> None:
        if not isinstance(target, OnePoint):
            raise StalkShapeMismatch("collapse maps must land in a one point stalk")

    def lipschitz(self, source, target) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"collapse": True}


def map_from_dict(spec: dict):
    if "matrix" in spec:
        return MatrixMap(spec["matrix"])
    if "table" in spec:
        return TableMap(spec["table"])
    if spec.get("collapse") or spec.get("kind") == "collapse":
        return CollapseMap()
    raise StalkShapeMismatch(f"cannot read map from {sorted(spec)}")


def identity_map(stalk):
    if isinstance(stalk, Euclidean):
        return MatrixMap(np.eye(stalk.dim))
    if isinstance(stalk, FiniteTable):
        return TableMap(range(len(stalk)))
    return CollapseMap()


def compose(outer, inner):
    """``outer`` after ``inner``."""
    if isinstance(outer, CollapseMap):
        return CollapseMap()
    if isinstance(outer, MatrixMap) and isinstance(inner, MatrixMap):
        return MatrixMap(outer.matrix @ inner.matrix)
    if isinstance(outer, TableMap) and isinstance(inner, TableMap):
        return TableMap(outer.table[i] for i in inner.table)
    raise StalkShapeMismatch(f"cannot compose {outer!r} after {inner!r}")


def map_deviation(f, g) -> float:
    """Largest pointwise disagreement of two maps with the same source.

    Matrix maps are compared on the standard basis (max-abs entry difference,
    which is what linear maps need); tables exhaustively and exactly.
    """
    if isinstance(f, CollapseMap) and isinstance(g, CollapseMap):
        return 0.0
    if isinstance(f, MatrixMap) and isinstance(g, MatrixMap):
        if f.matrix.shape != g.matrix.shape:
            return math.inf
        return float(np.max(np.abs(f.matrix - g.matrix), initial=0.0))
    if isinstance(f, TableMap) and isinstance(g, TableMap):
        return 0.0 if f.table == g.table else math.inf
    return math.inf


def operator_norm(matrix, source_metric: str = "linf", target_metric: str = "linf") -> float:
    """Exact (or safely inflated) operator norm between the given norms."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.size == 0:
        return 0.0
    if source_metric == "linf" and target_metric == "linf":
        return float(np.max(np.sum(np.abs(m), axis=1)))
    if source_metric == "l2" and target_metric == "linf":
        return float(np.max(np.linalg.norm(m, axis=1))) * (1 + NORM_SAFETY)
    if source_metric == "l2" and target_metric == "l2":
        return float(np.linalg.norm(m, 2)) * (1 + NORM_SAFETY)
    # sup-norm ball to Euclidean norm: convex, so the max sits on a cube vertex
    n = m.shape[1]
    if n <= 16:
        best = 0.0
        for signs in itertools.product((-1.0, 1.0), repeat=n - 1):
            v = np.array((1.0,) + signs)
            best = max(best, float(np.linalg.norm(m @ v)))
        return best * (1 + NORM_SAFETY)
    return float(np.linalg.norm(m, 2)) * math.sqrt(n) * (1 + NORM_SAFETY)
