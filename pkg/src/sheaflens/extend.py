"""Extending partially supported assignments with the least consistency radius.

Table stalks and Euclidean stalks never share a restriction map, so the
problem splits into a finite search over the free table values and a convex
program over the free Euclidean values. The convex part is solved by
multi-start subgradient descent with Polyak steps and then polished: by an
exact linear program when every Euclidean stalk uses the sup norm and the
objective is the maximum, by SLSQP otherwise. The linear program is followed
by a lexicographic pass that pushes down the non-binding thresholds one
level at a time, which picks out the balanced optimum when the plain
minimax optimum is not unique.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import NoSupport, NonConvergence, SheafMismatch
from .metricsheaf import (
    Assignment,
    MetricSheaf,
    consistency_radius,
    consistency_radius_l2,
)
from .stalks import Euclidean, FiniteTable, OnePoint

OBJECTIVES = ("linf", "l2")
MAX_TABLE_COMBINATIONS = 200_000


@dataclass
class ExtensionProblem:
    sheaf: MetricSheaf
    partial: Assignment
    objective: str = "linf"

    def __post_init__(self):
        if self.partial.sheaf is not self.sheaf:
            raise SheafMismatch("partial assignment belongs to a different sheaf")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        space = self.sheaf.space
        self.support = sorted(u for u in self.partial.support if u != space.empty_id)
        if not self.support:
            raise NoSupport("no open carries a value")
        fixed = set(self.support) | {space.empty_id}
        self.free = [u for u in range(len(space)) if u not in fixed]


@dataclass
class ExtensionResult:
    assignment: Assignment
    value: float
    radius: float
    diagnostics: dict = field(default_factory=dict)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SHEAFLENS_THREADS", "1")))
    except ValueError:
        return 1


# -- Euclidean part -----------------------------------------------------------


class _Terms:
    """Critical thresholds between Euclidean stalks as ``metric(A z + c)``."""

    def __init__(self, sheaf: MetricSheaf, values: Mapping[int, object], free: list[int]):
        space = sheaf.space
        self.free = [u for u in free if isinstance(sheaf.stalks[u], Euclidean)]
        self.offset = {}
        n = 0
        for u in self.free:
            self.offset[u] = n
            n += sheaf.stalks[u].dim
        self.n = n
        self.A, self.c, self.metric, self.pairs = [], [], [], []
        self.const = []  # thresholds with no free variable
        for (u, v) in space.inclusions:
            if u == v or u == space.empty_id:
                continue
            su, sv = sheaf.stalks[u], sheaf.stalks[v]
            if not (isinstance(su, Euclidean) and isinstance(sv, Euclidean)):
                continue
            R = sheaf.maps[(u, v)].matrix
            A = np.zeros((su.dim, n))
            c = np.zeros(su.dim)
            if v in self.offset:
                A[:, self.offset[v]:self.offset[v] + sv.dim] += R
            else:
                c += R @ values[v]
            if u in self.offset:
                A[:, self.offset[u]:self.offset[u] + su.dim] -= np.eye(su.dim)
            else:
                c -= values[u]
            if not np.any(A):
                self.const.append(su.distance(c, 0 * c))
                continue
            self.A.append(A)
            self.c.append(c)
            self.metric.append(su.metric)
            self.pairs.append((u, v))
        self.stack()

    def stack(self) -> None:
        """Stack every term into one matrix for vectorised evaluation."""
        n = self.n
        self.big_A = np.concatenate(self.A) if self.A else np.zeros((0, n))
        self.big_c = np.concatenate(self.c) if self.c else np.zeros(0)
        sizes = [A.shape[0] for A in self.A]
        self.seg = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int) if sizes else np.zeros(0, int)
        self.is_l2 = np.array([m == "l2" for m in self.metric], dtype=bool)
        self.const_max = max(self.const, default=0.0)
        self.const_sq = sum(t * t for t in self.const)

    def values(self, z) -> np.ndarray:
        if not self.A:
            return np.zeros(0)
        r = self.big_A @ z + self.big_c
        out = np.maximum.reduceat(np.abs(r), self.seg)
        if self.is_l2.any():
            out = np.where(self.is_l2, np.sqrt(np.add.reduceat(r * r, self.seg)), out)
        return out

    def objective(self, z, kind: str) -> float:
        vals = self.values(z)
        if kind == "linf":
            return float(max(vals.max(initial=0.0), self.const_max))
        return math.sqrt(float(vals @ vals) + self.const_sq)

    def subgradient(self, z, kind: str):
        vals = self.values(z)
        g = np.zeros(self.n)
        if not len(vals):
            return self.objective(z, kind), g
        if kind == "linf":
            k = int(np.argmax(vals))
            g = self._term_grad(k, z)
            f = float(max(vals[k], self.const_max))
        else:
            f = math.sqrt(float(vals @ vals) + self.const_sq)
            sq = math.sqrt(float(vals @ vals))
            if sq > 0:
                for k in np.nonzero(vals)[0]:
                    g += vals[k] / f * self._term_grad(k, z)
        return f, g

    def _term_grad(self, k: int, z) -> np.ndarray:
        A, c, m = self.A[k], self.c[k], self.metric[k]
        r = A @ z + c
        if m == "linf":
            i = int(np.argmax(np.abs(r)))
            return np.sign(r[i]) * A[i]
        norm = math.sqrt(r @ r)
        return A.T @ (r / norm) if norm > 0 else np.zeros(self.n)


def _descend(terms: _Terms, z0, kind: str, tol: float, budget: int) -> tuple[np.ndarray, float, dict]:
    """Subgradient descent with the Polyak step against a moving target."""
    z = np.array(z0, dtype=float)
    best_z = z.copy()
    best, g = terms.subgradient(z, kind)
    delta = max(0.1 * best, tol)
    stall = 0
    it = 0
    for it in range(1, budget + 1):
        f, g = terms.subgradient(z, kind)
        if f < best - 1e-15:
            best, best_z = f, z.copy()
            stall = 0
        else:
            stall += 1
        gg = float(g @ g)
        if best <= tol * 1e-3 or gg == 0.0:
            break
        if stall >= 40:
            delta *= 0.5
            stall = 0
            z = best_z.copy()
            if delta < tol * 1e-2:
                break
        z = z - (f - (best - delta)) / gg * g
    info = {"iterations": it, "final_step_target": delta, "converged": delta < tol * 1e-2 or best <= tol * 1e-3}
    return best_z, best, info


def _lp(terms: _Terms, objective: list[int], bounded: Mapping[int, float]):
    """Minimise ``s`` with objective terms below ``s`` and the rest below their bound."""
    n = terms.n
    rows, rhs = [], []
    for k in objective:
        A, c = terms.A[k], terms.c[k]
        for i in range(A.shape[0]):
            rows.append(np.append(A[i], -1.0))
            rhs.append(-c[i])
            rows.append(np.append(-A[i], -1.0))
            rhs.append(c[i])
    for k, level in bounded.items():
        A, c = terms.A[k], terms.c[k]
        for i in range(A.shape[0]):
            rows.append(np.append(A[i], 0.0))
            rhs.append(level - c[i])
            rows.append(np.append(-A[i], 0.0))
            rhs.append(level + c[i])
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    bounds = [(None, None)] * n + [(0, None)]
    res = linprog(
        cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return None
    return float(res.x[-1]), res.x[:n]


def _lexicographic(terms: _Terms, tol: float):
    """Lexicographic minimax over sup-norm terms via a sequence of LPs."""
    active = list(range(len(terms.A)))
    fixed: dict[int, float] = {}
    z = None
    lps = 0
    while active:
        out = _lp(terms, active, fixed)
        lps += 1
        if out is None:
            break
        level, z = out
        # fixed levels are held exactly; the solver's feasibility tolerance absorbs float noise
        slack = level
        binding = []
        for k in active:
            others = {j: slack for j in active if j != k}
            others.update(fixed)
            probe = _lp(terms, [k], others)
            lps += 1
            if probe is None or probe[0] >= level - max(tol * 1e-3, 1e-12):
                binding.append(k)
        if not binding:
            binding = list(active)
        for k in binding:
            fixed[k] = slack
        active = [k for k in active if k not in binding]
    return z, lps


def _slsqp(terms: _Terms, z0, kind: str):
    """Epigraph polish for Euclidean-norm terms or the sum-of-squares objective."""
    n = terms.n
    K = len(terms.A)
    if kind == "linf":
        # variables (z, t): min t with t^2 >= term^2 for every term
        def fun(x):
            return x[-1]

        def jac(x):
            g = np.zeros(n + 1)
            g[-1] = 1.0
            return g

        cons = []
        for k in range(K):
            A, c, m = terms.A[k], terms.c[k], terms.metric[k]
            if m == "linf":
                for i in range(A.shape[0]):
                    a, ci = A[i], c[i]
                    cons.append({"type": "ineq", "fun": lambda x, a=a, ci=ci: x[-1] - (a @ x[:n] + ci)})
                    cons.append({"type": "ineq", "fun": lambda x, a=a, ci=ci: x[-1] + (a @ x[:n] + ci)})
            else:
                def f(x, A=A, c=c):
                    r = A @ x[:n] + c
                    return x[-1] ** 2 - r @ r
                cons.append({"type": "ineq", "fun": f})
                cons.append({"type": "ineq", "fun": lambda x: x[-1]})
        x0 = np.append(z0, terms.objective(z0, "linf"))
        res = minimize(fun, x0, jac=jac, constraints=cons, method="SLSQP", options={"maxiter": 500, "ftol": 1e-14})
        return res.x[:n]
    # sum of squares: sup-norm terms get an epigraph variable each
    linf = [k for k in range(K) if terms.metric[k] == "linf"]
    slot = {k: n + i for i, k in enumerate(linf)}

    def fun(x):
        total = 0.0
        for k in range(K):
            if k in slot:
                total += x[slot[k]] ** 2
            else:
                r = terms.A[k] @ x[:n] + terms.c[k]
                total += r @ r
        return total

    cons = []
    for k in linf:
        A, c = terms.A[k], terms.c[k]
        for i in range(A.shape[0]):
            a, ci, s = A[i], c[i], slot[k]
            cons.append({"type": "ineq", "fun": lambda x, a=a, ci=ci, s=s: x[s] - (a @ x[:n] + ci)})
            cons.append({"type": "ineq", "fun": lambda x, a=a, ci=ci, s=s: x[s] + (a @ x[:n] + ci)})
    vals = terms.values(z0)
    x0 = np.concatenate([z0, [vals[k] for k in linf]])
    res = minimize(fun, x0, constraints=cons or (), method="SLSQP", options={"maxiter": 500, "ftol": 1e-16})
    return res.x[:n]


def _propagated_start(sheaf: MetricSheaf, terms: _Terms, values) -> np.ndarray:
    """Restrict the nearest supported superset's value; zero when none exists."""
    space = sheaf.space
    z = np.zeros(terms.n)
    for u in terms.free:
        over = [v for (w, v) in space.inclusions if w == u and v != u and v in values
                and isinstance(sheaf.stalks[v], Euclidean)]
        if over:
            v = min(over, key=lambda v: bin(space.masks[v]).count("1"))
            o = terms.offset[u]
            z[o:o + sheaf.stalks[u].dim] = sheaf.maps[(u, v)].apply(values[v])
    return z


def _solve_euclidean(sheaf, terms: _Terms, values, warm, kind, tol, budget, rng):
    if terms.n == 0:
        return np.zeros(0), {"iterations": 0, "starts": 0, "method": "none"}
    scale = max([1.0] + [float(np.max(np.abs(x))) for u, x in values.items()
                          if isinstance(sheaf.stalks[u], Euclidean)])
    starts = [_propagated_start(sheaf, terms, values), np.zeros(terms.n)]
    if warm is not None:
        starts.insert(0, warm)
    starts += [rng.uniform(-scale, scale, terms.n) for _ in range(8)]
    per_start = max(1, budget // len(starts))

    def run(z0):
        return _descend(terms, z0, kind, tol, per_start)

    workers = min(_threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(run, starts))
    else:
        runs = [run(z0) for z0 in starts]
    z, best, info = min(runs, key=lambda r: r[1])
    diag = {
        "iterations": sum(r[2]["iterations"] for r in runs),
        "starts": len(starts),
        "final_step_target": info["final_step_target"],
        "descent_value": best,
        "method": "subgradient",
    }
    all_linf = all(m == "linf" for m in terms.metric)
    polished = None
    if kind == "linf" and all_linf and terms.A:
        polished, lps = _lexicographic(terms, tol)
        diag["lp_solves"] = lps
        method = "subgradient+lexicographic-lp"
    elif terms.A:
        try:
            polished = _slsqp(terms, z, kind)
        except (ValueError, np.linalg.LinAlgError):
            polished = None
        method = "subgradient+slsqp"
    if polished is not None and np.all(np.isfinite(polished)):
        pv = terms.objective(polished, kind)
        # the lexicographic solution is preferred whenever it is optimal
        if pv <= best + tol * 1e-3:
            z, best = polished, pv
            diag["method"] = method
    if diag["method"] == "subgradient" and not any(r[2]["converged"] for r in runs):
        raise NonConvergence("iteration budget exhausted before the step target settled", diag)
    diag["certified_gap"] = None
    return z, diag


# -- table part ----------------------------------------------------------------


def _solve_tables(sheaf: MetricSheaf, values, free: list[int], kind: str):
    space = sheaf.space
    tfree = [u for u in free if isinstance(sheaf.stalks[u], FiniteTable)]
    if not tfree:
        return {}, 0
    total = math.prod(len(sheaf.stalks[u]) for u in tfree)
    if total > MAX_TABLE_COMBINATIONS:
        raise NonConvergence(
            f"{total} table combinations exceed the enumeration limit",
            {"combinations": total, "limit": MAX_TABLE_COMBINATIONS},
        )
    pairs = [
        (u, v) for (u, v) in space.inclusions
        if u != v and u != space.empty_id and isinstance(sheaf.stalks[u], FiniteTable)
        and (u in tfree or v in tfree)
    ]
    best, best_choice = math.inf, None
    for choice in itertools.product(*(range(len(sheaf.stalks[u])) for u in tfree)):
        vals = dict(zip(tfree, choice))
        acc = 0.0
        for (u, v) in pairs:
            xu = vals[u] if u in vals else values[u]
            xv = vals[v] if v in vals else values[v]
            d = sheaf.stalks[u].distance(sheaf.maps[(u, v)].apply(xv), xu)
            acc = max(acc, d) if kind == "linf" else acc + d * d
        if acc < best:
            best, best_choice = acc, vals
    return best_choice, total


# -- entry points --------------------------------------------------------------


def extend_minimize(
    sheaf: MetricSheaf,
    partial: Assignment,
    objective: str = "linf",
    tolerance: float = 1e-6,
    budget: int = 100_000,
    seed: int = 0,
    warm_start: Assignment | None = None,
) -> ExtensionResult:
    """Fill the unsupported opens of ``partial`` to minimise the objective.

    Supported values are never touched. Values that ``partial`` (or
    ``warm_start``) holds on unsupported opens are used as a starting point.
    The reported value is recomputed from the returned assignment.
    """
    problem = ExtensionProblem(sheaf, partial, objective)
    support = problem.support
    values = {u: partial.values[u] for u in support}
    rng = np.random.default_rng(seed)

    table_vals, combos = _solve_tables(sheaf, values, problem.free, objective)
    terms = _Terms(sheaf, values, problem.free)
    warm = None
    hint = warm_start.values if warm_start is not None else partial.values
    if terms.n and all(u in hint for u in terms.free):
        warm = np.concatenate([np.asarray(hint[u], dtype=float) for u in terms.free])
    z, diag = _solve_euclidean(sheaf, terms, values, warm, objective, tolerance, budget, rng)

    full = dict(values)
    full.update(table_vals)
    for u in terms.free:
        o = terms.offset[u]
        full[u] = z[o:o + sheaf.stalks[u].dim]
    for u in problem.free:
        if isinstance(sheaf.stalks[u], OnePoint):
            full[u] = None
    result = Assignment(sheaf, full, support)
    radius = consistency_radius(sheaf, result)
    value = radius if objective == "linf" else consistency_radius_l2(sheaf, result)
    diag["table_combinations"] = combos
    return ExtensionResult(result, value, radius, diag)


def partial_consistency(sheaf: MetricSheaf, partial: Assignment, objective: str = "linf", tolerance: float = 1e-6) -> float:
    """Least consistency radius over extensions of ``partial``."""
    space = sheaf.space
    if all(u in partial.support for u in range(len(space)) if u != space.empty_id):
        partial.require_total()
        if objective == "linf":
            return consistency_radius(sheaf, partial)
        return consistency_radius_l2(sheaf, partial)
    return extend_minimize(sheaf, partial, objective, tolerance).value
