"""JSON problem files: schema validation, building library objects, round trips.

Opens are referred to by name. With ``"opens": {"name": [points...]}`` the
names are chosen by the author; with a plain list, or for poset-generated
spaces, an open's name is its points joined by commas in point order (the
empty set is ``""``). Restrictions are keyed ``"V>U"``. A Hasse edge with no
restriction given defaults to the identity when both stalks are equal.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import SheafLensError, StalkShapeMismatch
from .finspace import FiniteSpace, alexandrov_from_preorder, build_explicit_topology
from .metricsheaf import Assignment, MetricSheaf, build_sheaf
from .stalks import (
    CollapseMap,
    Euclidean,
    FiniteTable,
    MatrixMap,
    OnePoint,
    TableMap,
    identity_map,
    stalk_from_dict,
)

SCHEMA = json.loads(resources.files("sheaflens").joinpath("problem.schema.json").read_text())


class SchemaError(SheafLensError, ValueError):
    """The file does not match the problem-file schema."""

    def __init__(self, message: str, path=()):
        self.path = list(path)
        super().__init__(message)

    def diagnostic(self) -> dict:
        return {"error": "schema", "message": str(self), "path": self.path}


def open_name(space: FiniteSpace, mask: int) -> str:
    return ",".join(p for i, p in enumerate(space.points) if mask >> i & 1)


@dataclass
class Problem:
    space: FiniteSpace
    sheaf: MetricSheaf
    assignment: Assignment
    names: list  # open id -> name
    options: dict

    def id_of(self, name: str) -> int:
        return self.names.index(name)


class ProblemFile:
    """A validated, normalised problem file."""

    def __init__(self, data: dict):
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SchemaError(exc.message, exc.absolute_path) from None
        self.data = self._normalise(copy.deepcopy(data))

    @staticmethod
    def _normalise(d: dict) -> dict:
        if "space" in d and isinstance(d["space"]["opens"], list):
            pts = d["space"]["points"]
            d["space"]["opens"] = {
                ",".join(p for p in pts if p in members): sorted(members, key=pts.index)
                for members in d["space"]["opens"]
            }
        sheaf = d.setdefault("sheaf", {})
        sheaf.setdefault("stalks", {})
        sheaf.setdefault("restrictions", {})
        for st in list(sheaf["stalks"].values()) + ([sheaf["default"]] if "default" in sheaf else []):
            if st["kind"] == "euclidean":
                st.setdefault("metric", "linf")
        a = d.setdefault("assignment", {})
        a.setdefault("values", {})
        a["values"] = {k: ([v] if isinstance(v, (int, float)) and not isinstance(v, bool) else v)
                       for k, v in a["values"].items()}
        a.setdefault("support", sorted(a["values"]))
        a["support"] = sorted(a["support"])
        opts = d.setdefault("options", {})
        opts.setdefault("field", "f2")
        opts.setdefault("objective", "linf")
        opts.setdefault("tol", 1e-6)
        return d

    @classmethod
    def loads(cls, text: str) -> "ProblemFile":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
        return cls(data)

    @classmethod
    def load(cls, path) -> "ProblemFile":
        return cls.loads(Path(path).read_text())

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dumps(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)

    def __eq__(self, other) -> bool:
        return isinstance(other, ProblemFile) and self.dumps() == other.dumps()

    # -- building ---------------------------------------------------------------

    def _space(self) -> tuple[FiniteSpace, list[str]]:
        d = self.data
        if "space" in d:
            named = d["space"]["opens"]
            space = build_explicit_topology(d["space"]["points"], named.values())
            names = [None] * len(space)
            for name, members in named.items():
                names[space.id_of(set(members))] = name
            return space, names
        p = d["poset"]
        space = alexandrov_from_preorder(
            p["points"], [tuple(x) for x in p["leq"]], p.get("cap", 4096), p.get("orientation", "down")
        )
        return space, [open_name(space, m) for m in space.masks]

    def build(self) -> Problem:
        space, names = self._space()
        index = {n: i for i, n in enumerate(names)}
        sh = self.data["sheaf"]

        def lookup(name: str) -> int:
            if name not in index:
                raise StalkShapeMismatch(f"no open named {name!r}")
            return index[name]

        stalks = {}
        for u, name in enumerate(names):
            if u == space.empty_id:
                continue
            spec = sh["stalks"].get(name, sh.get("default"))
            if spec is None:
                raise StalkShapeMismatch(f"no stalk for open {name!r} and no default")
            stalks[u] = stalk_from_dict(spec)
        for name in sh["stalks"]:
            lookup(name)

        gens = {}
        for key, spec in sh["restrictions"].items():
            big, small = key.split(">")
            v, u = lookup(big), lookup(small)
            gens[(u, v)] = _map_body(spec, stalks.get(v, OnePoint()), stalks.get(u, OnePoint()))
        for (u, v) in space.hasse:
            if (u, v) in gens or u == space.empty_id:
                continue
            if stalks[u] == stalks[v]:
                gens[(u, v)] = identity_map(stalks[u])
        sheaf = build_sheaf(space, stalks, gens, sh.get("tol", 1e-9))

        a = self.data["assignment"]
        values = {lookup(k): v for k, v in a["values"].items()}
        support = [lookup(k) for k in a["support"]]
        assignment = Assignment(sheaf, values, support)
        return Problem(space, sheaf, assignment, names, dict(self.data["options"]))

    @classmethod
    def from_objects(cls, space: FiniteSpace, sheaf: MetricSheaf, assignment: Assignment | None = None,
                     options: dict | None = None) -> "ProblemFile":
        """Serialise library objects; opens are named by their points."""
        names = [open_name(space, m) for m in space.masks]
        stalks = {names[u]: s.to_dict() for u, s in enumerate(sheaf.stalks) if u != space.empty_id}
        rests = {
            f"{names[v]}>{names[u]}": body.to_dict()
            for (u, v), body in sheaf.generators.items()
            if not isinstance(body, CollapseMap)
        }
        data = {
            "version": 1,
            "space": {"points": list(space.points), "opens": {names[u]: sorted(space.labels(m), key=space.points.index)
                                                             for u, m in enumerate(space.masks)}},
            "sheaf": {"stalks": stalks, "restrictions": rests, "tol": sheaf.tol},
        }
        if assignment is not None:
            vals = {}
            for u, x in assignment.values.items():
                if u == space.empty_id:
                    continue
                st = sheaf.stalks[u]
                if isinstance(st, Euclidean):
                    vals[names[u]] = [float(t) for t in x]
                elif isinstance(st, FiniteTable):
                    vals[names[u]] = st.labels[x]
                else:
                    vals[names[u]] = None
            data["assignment"] = {"values": vals, "support": sorted(names[u] for u in assignment.support)}
        if options:
            data["options"] = dict(options)
        return cls(data)


def _map_body(spec: dict, source, target):
    if "matrix" in spec:
        return MatrixMap(spec["matrix"])
    if "table" in spec:
        if not isinstance(target, FiniteTable):
            raise StalkShapeMismatch("a lookup table needs a table stalk as target")
        return TableMap(target.element(t) for t in spec["table"])
    return CollapseMap()
