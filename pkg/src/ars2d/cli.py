"""Command-line driver.

Subcommands: analyze, compare, distance, graph, classify, ballbox.
Inputs are file paths or built-in fixture names (structure fixtures such
as grushin-torus, graph fixtures such as fig1).  All output is
deterministic: sorted ids, sorted keys, fixed float formatting.

Exit codes: 0 success, 1 not equivalent, 2 invalid input, 3 genericity
hypothesis failed, 4 target unreachable on the grid.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .analysis import analyze, report_to_json
from .errors import ArsError, DegeneratePoint, SpecError, Unreachable
from .graph import (
    GRAPH_FIXTURES,
    LabelledGraph,
    equivalent,
    graph_from_json,
    graph_to_dot,
    graph_to_json,
    load_graph_fixture,
)
from .model import (
    ArsSpec,
    DEFAULT_RESOLUTION,
    FIXTURE_NAMES,
    classify_point,
    fixture,
    spec_from_json,
)
from . import distance as _dist

EXIT_OK = 0
EXIT_NOT_EQUIVALENT = 1
EXIT_INVALID = 2
EXIT_H0_FAIL = 3
EXIT_UNREACHABLE = 4


def _load_any(token: str):
    """Resolve a CLI input token to an ArsSpec or a LabelledGraph.

    A readable file wins over a fixture name; the JSON keys decide which
    kind of object the file holds.
    """
    if os.path.exists(token):
        try:
            with open(token, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise SpecError("cannot read %s: %s" % (token, e)) from e
        try:
            head = json.loads(text)
        except json.JSONDecodeError as e:
            raise SpecError("%s is not valid JSON: %s" % (token, e)) from e
        if isinstance(head, dict) and "vertices" in head:
            return graph_from_json(text)
        return spec_from_json(text)
    if token in GRAPH_FIXTURES:
        return load_graph_fixture(token)
    if token in FIXTURE_NAMES:
        return fixture(token)
    raise SpecError("no file or fixture named %r" % token)


def _load_spec(token: str) -> ArsSpec:
    obj = _load_any(token)
    if not isinstance(obj, ArsSpec):
        raise SpecError("%r is a graph, but a structure spec is required" % token)
    return obj


def _spec_token(args) -> str:
    if getattr(args, "fixture", None):
        return args.fixture
    if getattr(args, "input", None):
        return args.input
    raise SpecError("no input given (pass a file/fixture name or --fixture)")


def _parse_point(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise SpecError("expected 'x,y', got %r" % text)
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as e:
        raise SpecError("bad coordinate in %r" % text) from e


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _cmd_analyze(args) -> int:
    s = _load_spec(_spec_token(args))
    report = analyze(s, args.resolution)
    _emit(report_to_json(report), args.out)
    return EXIT_OK if report.h0.ok else EXIT_H0_FAIL


def _graph_of(token: str, resolution: int) -> LabelledGraph:
    obj = _load_any(token)
    if isinstance(obj, LabelledGraph):
        return obj
    report = analyze(obj, resolution)
    if report.graph is None:
        raise SpecError("%r is a plane-chart structure; it has no graph" % token)
    return report.graph


def _cmd_compare(args) -> int:
    g1 = _graph_of(args.a, args.resolution)
    g2 = _graph_of(args.b, args.resolution)
    witness = equivalent(g1, g2)
    if witness is None:
        _emit("NOT-EQUIVALENT\n", args.out)
        return EXIT_NOT_EQUIVALENT
    lines = ["EQUIVALENT flipped=%s" % ("true" if witness.flipped else "false"),
             json.dumps(witness.to_dict(), sort_keys=True)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_distance(args) -> int:
    s = _load_spec(_spec_token(args))
    p = _parse_point(args.src)
    q = _parse_point(args.dst)
    if args.method == "grid":
        d = _dist.cc_distance_grid(s, p, q, args.resolution)
        _emit("%.12g\n" % d, args.out)
        return EXIT_OK
    if args.covector is None:
        raise SpecError("--method shoot requires --covector px,py")
    p0 = _parse_point(args.covector)
    curve = _dist.geodesic_shoot(s, p, p0, args.time, args.steps)
    length = _dist.curve_length(s, curve)
    ep = curve.endpoint
    _emit("endpoint %.12g,%.12g length %.12g\n" % (ep[0], ep[1], length),
          args.out)
    return EXIT_OK


def _cmd_graph(args) -> int:
    g = _graph_of(_spec_token(args), args.resolution)
    text = graph_to_json(g) if args.format == "json" else graph_to_dot(g)
    _emit(text, args.out)
    return EXIT_OK


def _cmd_classify(args) -> int:
    s = _load_spec(_spec_token(args))
    p = _parse_point(args.point)
    if not s.chart.contains(p[0], p[1]):
        raise SpecError("point %s,%s outside the chart" % p)
    cls = classify_point(s, p)
    _emit(cls.value + "\n", args.out)
    return EXIT_OK


def _cmd_ballbox(args) -> int:
    s = _load_spec(_spec_token(args))
    p = _parse_point(args.point)
    d = _parse_point(args.direction)
    slope = _dist.ballbox_exponent(s, p, d, args.h_min, args.h_max,
                                   args.resolution)
    _emit("%.6f\n" % slope, args.out)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="ars2d",
        description="Analyze 2d almost-Riemannian structures: singular "
                    "locus, labelled graphs, equivalence, distances.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("input", nargs="?",
                           help="spec/graph JSON file or fixture name")
            p.add_argument("--fixture", choices=FIXTURE_NAMES,
                           help="use a built-in structure instead of a file")
        p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("analyze", help="full pipeline, JSON report")
    common(p)
    p.set_defaults(run=_cmd_analyze)

    p = sub.add_parser("compare", help="Lipschitz-equivalence verdict")
    p.add_argument("a", help="spec/graph file or fixture name")
    p.add_argument("b", help="spec/graph file or fixture name")
    p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    p.add_argument("--out")
    p.set_defaults(run=_cmd_compare)

    p = sub.add_parser("distance", help="Carnot-Caratheodory distance")
    common(p)
    p.add_argument("src", help="source point x,y")
    p.add_argument("dst", help="target point x,y")
    p.add_argument("--method", choices=("grid", "shoot"), default="grid")
    p.add_argument("--covector", help="initial covector px,py for shooting")
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=4000)
    p.set_defaults(run=_cmd_distance)

    p = sub.add_parser("graph", help="labelled graph of a structure")
    common(p)
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.set_defaults(run=_cmd_graph)

    p = sub.add_parser("classify", help="point classification")
    common(p)
    p.add_argument("point", help="point x,y")
    p.set_defaults(run=_cmd_classify)

    p = sub.add_parser("ballbox", help="Ball-Box exponent fit")
    common(p)
    p.add_argument("point", help="base point x,y")
    p.add_argument("direction", help="direction dx,dy")
    p.add_argument("--h-min", type=float, default=0.01)
    p.add_argument("--h-max", type=float, default=0.16)
    p.set_defaults(run=_cmd_ballbox)
    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.run(args)
    except Unreachable as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_UNREACHABLE
    except DegeneratePoint as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_H0_FAIL
    except ArsError as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_INVALID


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
