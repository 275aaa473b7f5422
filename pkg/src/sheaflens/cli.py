"""Command-line front end.

Exit codes: 0 success, 1 other library error, 2 invalid problem file,
3 partial assignment without ``--extend``, 4 size cap exceeded,
5 problem files over different spaces.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from . import __version__
from .cech import barcode, bottleneck, persistence_module_from_filtration
from .errors import (
    CapExceeded,
    PartialAssignment,
    SheafLensError,
    SpaceMismatch,
)
from .extend import extend_minimize
from .filtration import consistency_filtration, interleaving_upper_bound
from .metricsheaf import (
    consistency_diameter,
    consistency_radius,
    consistency_radius_l2,
    critical_thresholds,
    sheaf_lipschitz,
)
from .pointcloud import cloud_diagram, load_cloud, oracle_diagram, same_diagram
from .problem import ProblemFile, SchemaError
from .stalks import Euclidean

EXIT_OK, EXIT_ERROR, EXIT_SCHEMA, EXIT_PARTIAL, EXIT_CAP, EXIT_SPACE = 0, 1, 2, 3, 4, 5


def num(x, exact: bool = False):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if exact:
        f = Fraction(x)
        return [f.numerator, f.denominator]
    return float(f"{x:.12g}")


def _value(stalk, x, exact):
    if isinstance(stalk, Euclidean):
        return [num(t, exact) for t in x]
    if x is None:
        return None
    return stalk.labels[x]


def _load(path, args):
    """Problem with a total assignment, extending it when asked."""
    pf = ProblemFile.load(path)
    prob = pf.build()
    a = prob.assignment
    extended = None
    if not a.is_total:
        if not args.extend:
            raise PartialAssignment(a.missing())
        tol = args.tol if args.tol is not None else prob.options["tol"]
        extended = extend_minimize(prob.sheaf, a, prob.options["objective"], tol)
        a = extended.assignment
    return prob, a, extended


def _field(args, prob=None):
    if args.field:
        return args.field
    return prob.options["field"] if prob is not None else "f2"


def _bar_rows(diagram, exact):
    return diagram.to_records(exact)


def _print_bars_csv(diagram, out):
    out.write("degree,birth,death\n")
    for k in sorted(diagram.bars):
        for b, d in diagram.bars[k]:
            out.write(f"{k},{b:.12g},{'inf' if math.isinf(d) else f'{d:.12g}'}\n")


def _emit(report: dict, args, human) -> None:
    if args.json:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        human(report)


# -- commands -------------------------------------------------------------------


def cmd_radius(args) -> int:
    prob, a, extended = _load(args.file, args)
    sheaf, names, ex = prob.sheaf, prob.names, args.exact
    c = consistency_radius(sheaf, a)
    K = sheaf_lipschitz(sheaf)
    report = {
        "radius": num(c, ex),
        "radius_l2": num(consistency_radius_l2(sheaf, a), ex),
        "diameter": num(consistency_diameter(sheaf, a), ex),
        "lipschitz": num(K, ex),
        "section_distance_lower_bound": num(c / (1 + K), ex),
        "thresholds": [
            {"smaller": names[u], "larger": names[v], "value": num(t, ex)}
            for u, v, t in critical_thresholds(sheaf, a)
        ],
        "extended": extended is not None,
    }
    if extended is not None:
        report["assignment"] = {
            names[u]: _value(sheaf.stalks[u], x, ex)
            for u, x in sorted(a.values.items()) if u != prob.space.empty_id
        }
        report["solver"] = {k: v for k, v in extended.diagnostics.items() if isinstance(v, (int, float, str))}

    def human(r):
        print(f"consistency radius     {r['radius']}")
        print(f"L2 radius              {r['radius_l2']}")
        print(f"consistency diameter   {r['diameter']}")
        print(f"Lipschitz constant K   {r['lipschitz']}")
        print(f"c/(1+K)                {r['section_distance_lower_bound']}")
        print("critical thresholds:")
        for t in r["thresholds"]:
            print(f"  {t['smaller'] or '{}':>12} < {t['larger']:<12} {t['value']}")
        if r["extended"]:
            print("extended assignment:")
            for k, v in r["assignment"].items():
                print(f"  {k:>12}  {v}")

    _emit(report, args, human)
    return EXIT_OK


def cmd_filtration(args) -> int:
    prob, a, _ = _load(args.file, args)
    filt = consistency_filtration(prob.sheaf, a)
    names, space, ex = prob.names, prob.space, args.exact
    edges = (0.0,) + filt.breakpoints + (math.inf,)
    report = {
        "breakpoints": [num(t, ex) for t in filt.breakpoints],
        "covers": [
            {
                "from": num(edges[i], ex),
                "to": num(edges[i + 1], ex),
                "cover": [names[space.id_of(m)] for m in cover.sets],
            }
            for i, cover in enumerate(filt.covers)
        ],
    }
    diagram = None
    if args.persist or args.plot_data:
        module = persistence_module_from_filtration(filt, _field(args, prob), degree_cap=1)
        diagram = barcode(module)
        report["dims"] = {str(k): d for k, d in enumerate(module.dims)}
        report["barcode"] = _bar_rows(diagram, ex)
    if args.plot_data:
        _print_bars_csv(diagram, sys.stdout)
        return EXIT_OK

    def human(r):
        print("breakpoints: " + ", ".join(str(t) for t in r["breakpoints"]))
        for row in r["covers"]:
            members = " ".join("{" + m + "}" for m in row["cover"]) or "(empty)"
            print(f"  ({row['from']}, {row['to']}]  {members}")
        if "barcode" in r:
            print("barcode:")
            for rec in r["barcode"]:
                print(f"  H^{rec['degree']}  ({rec['birth']}, {rec['death']}]  x{rec['multiplicity']}")

    _emit(report, args, human)
    return EXIT_OK


def cmd_pointcloud(args) -> int:
    cloud = load_cloud(args.file, cap=args.cap or 8)
    field = _field(args)
    pipeline = cloud_diagram(cloud, field)
    oracle = oracle_diagram(cloud)
    if args.plot_data:
        _print_bars_csv(pipeline, sys.stdout)
        return EXIT_OK
    report = {
        "points": cloud.N,
        "dimension": cloud.M,
        "sheaf_barcode": _bar_rows(pipeline, args.exact),
        "oracle_barcode": _bar_rows(oracle, args.exact),
        "equal": same_diagram(pipeline, oracle),
    }

    def human(r):
        print(f"{r['points']} points in R^{r['dimension']}")
        for key in ("sheaf_barcode", "oracle_barcode"):
            print(key.replace("_", " ") + ":")
            for rec in r[key]:
                print(f"  H^{rec['degree']}  ({rec['birth']}, {rec['death']}]  x{rec['multiplicity']}")
        print("barcodes agree" if r["equal"] else "BARCODES DIFFER")

    _emit(report, args, human)
    return EXIT_OK


def cmd_interleave(args) -> int:
    pa, a, _ = _load(args.file_a, args)
    pb, b, _ = _load(args.file_b, args)
    if pa.space.points != pb.space.points or pa.space.masks != pb.space.masks:
        raise SpaceMismatch("the two problem files describe different spaces")
    F = consistency_filtration(pa.sheaf, a)
    G = consistency_filtration(pb.sheaf, b)
    bound = interleaving_upper_bound(F, G)
    field = _field(args, pa)
    dA = barcode(persistence_module_from_filtration(F, field, 1))
    dB = barcode(persistence_module_from_filtration(G, field, 1))
    dists = {k: bottleneck(dA.degree(k), dB.degree(k)) for k in (0, 1)}
    report = {
        "interleaving_upper_bound": num(bound, args.exact),
        "bottleneck": {str(k): num(v, args.exact) for k, v in dists.items()},
        "stable": all(v <= bound + 1e-9 for v in dists.values()),
    }

    def human(r):
        print(f"interleaving upper bound  {r['interleaving_upper_bound']}")
        for k, v in r["bottleneck"].items():
            print(f"bottleneck H^{k}            {v}")
        print("stability holds" if r["stable"] else "STABILITY FAILS")

    _emit(report, args, human)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--exact", action="store_true", help="print numbers as exact [num, den] of the float")
    common.add_argument("--field", choices=("f2", "q"), help="coefficient field for cohomology")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--cap", type=int, help="size cap for point clouds")
    common.add_argument("--extend", action="store_true", help="fill unsupported opens by minimising the radius")
    common.add_argument("--persist", action="store_true", help="add persistent cohomology barcodes")
    common.add_argument("--plot-data", action="store_true", help="emit degree,birth,death CSV only")

    parser = argparse.ArgumentParser(prog="sheaflens", description="Consistency of local data on finite spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("radius", parents=[common], help="consistency radius and thresholds")
    p.add_argument("file")
    p.set_defaults(func=cmd_radius)
    p = sub.add_parser("filtration", parents=[common], help="consistency filtration")
    p.add_argument("file")
    p.set_defaults(func=cmd_filtration)
    p = sub.add_parser("pointcloud", parents=[common], help="point-cloud barcodes, sheaf pipeline vs oracle")
    p.add_argument("file")
    p.set_defaults(func=cmd_pointcloud)
    p = sub.add_parser("interleave", parents=[common], help="interleaving bound and bottleneck distances")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=cmd_interleave)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(json.dumps(exc.diagnostic()), file=sys.stderr)
        return EXIT_SCHEMA
    except PartialAssignment as exc:
        print(json.dumps({"error": "partial", "message": str(exc)}), file=sys.stderr)
        return EXIT_PARTIAL
    except CapExceeded as exc:
        print(json.dumps({"error": "cap", "message": str(exc)}), file=sys.stderr)
        return EXIT_CAP
    except SpaceMismatch as exc:
        print(json.dumps({"error": "space", "message": str(exc)}), file=sys.stderr)
        return EXIT_SPACE
    except (SheafLensError, ValueError) as exc:
        # structurally valid JSON that still describes an invalid problem
        print(json.dumps({"error": "invalid", "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
