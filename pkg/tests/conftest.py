"""Shared test machinery.

Provides seeded RNG fixtures, a random expression generator with
evaluation-point rejection (keeps points away from poles, branch cuts
and overflow), a random labelled-graph generator, and a session cache of
full analyses so expensive fixtures are computed once.

The acceptance tests get a terminal summary hook: one PASS/FAIL line per
criterion, printed after the run.
"""

import functools
import math

import numpy as np
import pytest

from ars2d import expr as ex
from ars2d.analysis import analyze
from ars2d.graph import GraphEdge, GraphVertex, LabelledGraph
from ars2d.model import fixture

SEED = 20260823


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


# ---------------------------------------------------------------------------
# Random expressions


def random_expr(rng, depth=3):
    """Random AST over the full grammar with bounded depth."""
    r = rng.random()
    if depth <= 0 or r < 0.3:
        k = rng.integers(0, 4)
        if k == 0:
            return ex.Var("x")
        if k == 1:
            return ex.Var("y")
        if k == 2:
            return ex.Num(float(np.round(rng.uniform(-3, 3), 3)))
        return ex.Pi()
    k = rng.integers(0, 8)
    a = random_expr(rng, depth - 1)
    try:
        if k == 0:
            return ex.neg(a)
        if k == 1:
            return ex.call(str(rng.choice(["sin", "cos", "exp", "sqrt", "atan"])), a)
        if k == 2:
            return ex.powi(a, int(rng.integers(-2, 4)))
        b = random_expr(rng, depth - 1)
        if k == 3:
            return ex.add(a, b)
        if k == 4:
            return ex.sub(a, b)
        if k == 5:
            return ex.mul(a, b)
        if k == 6:
            return ex.div(a, b)
        return ex.mul(a, b)
    except ex.DomainError:
        # constant folding hit a literal pole (for example x / 0); retry
        return random_expr(rng, depth)


def _point_ok(e, x, y):
    """Reject points where e is near a pole, a branch point, or huge."""
    if isinstance(e, ex.Div):
        if abs(ex.evaluate(e.b, x, y)) < 0.25:
            return False
        return _point_ok(e.a, x, y) and _point_ok(e.b, x, y)
    if isinstance(e, ex.Pow):
        if e.exponent < 0 and abs(ex.evaluate(e.base, x, y)) < 0.25:
            return False
        return _point_ok(e.base, x, y)
    if isinstance(e, ex.Call):
        if not _point_ok(e.arg, x, y):
            return False
        v = ex.evaluate(e.arg, x, y)
        if e.func == "sqrt" and v < 0.1:
            return False
        if e.func == "exp" and abs(v) > 4:
            return False
        return True
    for child in ("a", "b"):
        sub = getattr(e, child, None)
        if sub is not None and not _point_ok(sub, x, y):
            return False
    return True


def random_expr_and_point(rng, depth=3, tries=60):
    """An expression plus a point where it and its neighborhood are tame."""
    while True:
        e = random_expr(rng, depth)
        for _ in range(tries):
            x = float(rng.uniform(-2, 2))
            y = float(rng.uniform(-2, 2))
            try:
                if not _point_ok(e, x, y):
                    continue
                v = ex.evaluate(e, x, y)
            except Exception:
                continue
            if abs(v) < 1e3:
                return e, x, y
        # expression is awkward everywhere; draw a new one


# ---------------------------------------------------------------------------
# Random graphs


def random_graph(rng, distinct_sign_counts=False):
    """A random valid labelled graph; optionally with unequal numbers of
    negative and positive vertices, which rules out flip symmetry."""
    while True:
        n_neg = int(rng.integers(1, 5))
        n_pos = int(rng.integers(1, 5))
        if not distinct_sign_counts or n_neg != n_pos:
            break
    verts = []
    for i in range(n_neg):
        verts.append(GraphVertex("n%d" % i, -1, int(rng.integers(-4, 3))))
    for i in range(n_pos):
        verts.append(GraphVertex("p%d" % i, +1, int(rng.integers(-4, 3))))
    edges = []
    for j in range(int(rng.integers(0, 7))):
        cyc = tuple(int(c) for c in rng.choice([-1, 1], size=rng.integers(0, 6)))
        edges.append(GraphEdge("e%d" % j,
                               "n%d" % rng.integers(0, n_neg),
                               "p%d" % rng.integers(0, n_pos),
                               cyc))
    return LabelledGraph(tuple(verts), tuple(edges))


def shuffled_copy(rng, g):
    """Same graph with permuted ids and rotated stored cycles."""
    vids = [v.id for v in g.vertices]
    perm = dict(zip(vids, rng.permutation(vids)))
    verts = [GraphVertex(perm[v.id], v.sign, v.chi) for v in g.vertices]
    eids = [e.id for e in g.edges]
    eperm = dict(zip(eids, rng.permutation(eids)))
    edges = []
    for e in g.edges:
        cyc = e.cycle
        if cyc:
            k = int(rng.integers(0, len(cyc)))
            cyc = cyc[k:] + cyc[:k]
        edges.append(GraphEdge(eperm[e.id], perm[e.alpha], perm[e.omega], cyc))
    order_v = rng.permutation(len(verts))
    order_e = rng.permutation(len(edges)) if edges else []
    return LabelledGraph(tuple(verts[i] for i in order_v),
                         tuple(edges[i] for i in order_e))


# ---------------------------------------------------------------------------
# Cached analyses


@functools.lru_cache(maxsize=None)
def analyzed(name, resolution):
    return analyze(fixture(name), resolution)


@pytest.fixture(scope="session")
def analysis_cache():
    return analyzed


# ---------------------------------------------------------------------------
# Acceptance reporting

_acceptance_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    if "test_acceptance.py" not in str(item.fspath):
        return
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    _acceptance_results[item.nodeid] = (doc, report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance_results):
        doc, passed = _acceptance_results[nodeid]
        terminalreporter.write_line(
            "%s: %s" % (doc, "PASS" if passed else "FAIL"))
