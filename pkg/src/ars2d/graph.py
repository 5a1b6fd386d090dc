"""Labelled bipartite multigraph of a 2-ARS and its equivalence test.

Vertices are the connected components of M \\ Z labelled (sign, chi);
edges are the components of Z, each joining the M- component on its
right to the M+ component on its left and labelled by the cyclic
sequence of tangency contributions in walking order.  Cycles are stored
in canonical rotation (lexicographically minimal, -1 before +1), so
equality of labels is plain tuple equality.

Two structures are Lipschitz equivalent exactly when their graphs match
under a label-preserving isomorphism, possibly after the orientation
flip (negate vertex signs, swap edge endpoints, reverse and negate
cycles).  equivalent() searches directly first, then against the
flipped graph, and returns a checkable witness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import ndimage

from . import expr as ex
from .errors import AdjacencyAmbiguous, SpecError
from .model import ArsSpec, det_frame

__all__ = [
    "GraphVertex",
    "GraphEdge",
    "LabelledGraph",
    "EquivalenceWitness",
    "canonical_cycle",
    "flip",
    "equivalent",
    "verify_witness",
    "euler_number",
    "total_chi",
    "build_graph",
    "graph_to_json",
    "graph_from_json",
    "graph_to_dot",
    "GRAPH_FIXTURES",
    "load_graph_fixture",
]

GRAPH_FIXTURES = ("fig1", "fig3a", "fig3b", "fig3c", "fig5")


def load_graph_fixture(name: str) -> "LabelledGraph":
    """Bundled reference graphs used by the comparison tests and CLI."""
    if name not in GRAPH_FIXTURES:
        raise SpecError("unknown graph fixture %r (known: %s)"
                        % (name, ", ".join(GRAPH_FIXTURES)))
    text = resources.files("ars2d").joinpath("fixtures/%s.json" % name).read_text()
    return graph_from_json(text)


def canonical_cycle(seq):
    """Lexicographically minimal rotation of a cyclic sign sequence,
    with -1 ordered before +1 (Booth's least-rotation algorithm)."""
    s = tuple(int(v) for v in seq)
    n = len(s)
    if n == 0:
        return ()
    if any(v not in (-1, 1) for v in s):
        raise SpecError("cycle entries must be -1 or +1, got %r" % (s,))
    doubled = s + s
    f = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = doubled[j]
        i = f[j - k - 1]
        while i != -1 and sj != doubled[k + i + 1]:
            if sj < doubled[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != doubled[k + i + 1]:
            if sj < doubled[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return s[k:] + s[:k]


@dataclass(frozen=True)
class GraphVertex:
    id: str
    sign: int
    chi: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise SpecError("vertex sign must be -1 or +1")


@dataclass(frozen=True)
class GraphEdge:
    id: str
    alpha: str   # endpoint with sign -1
    omega: str   # endpoint with sign +1
    cycle: tuple

    def __post_init__(self):
        object.__setattr__(self, "cycle", canonical_cycle(self.cycle))

    @property
    def tau(self) -> int:
        return sum(self.cycle)


@dataclass(frozen=True)
class LabelledGraph:
    vertices: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        byid = {}
        for v in self.vertices:
            if v.id in byid:
                raise SpecError("duplicate vertex id %r" % v.id)
            byid[v.id] = v
        seen = set()
        for e in self.edges:
            if e.id in seen:
                raise SpecError("duplicate edge id %r" % e.id)
            seen.add(e.id)
            if e.alpha not in byid or e.omega not in byid:
                raise SpecError("edge %r references a missing vertex" % e.id)
            if byid[e.alpha].sign != -1 or byid[e.omega].sign != 1:
                raise SpecError(
                    "edge %r must join a -1 vertex (alpha) to a +1 vertex (omega)"
                    % e.id)

    def vertex(self, vid: str) -> GraphVertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)


def flip(g: LabelledGraph) -> LabelledGraph:
    """Orientation reversal of the bundle: vertex signs negate, edge
    endpoints swap, cycles reverse and negate (then re-canonicalize)."""
    vs = tuple(GraphVertex(v.id, -v.sign, v.chi) for v in g.vertices)
    es = tuple(GraphEdge(e.id, e.omega, e.alpha,
                         tuple(-c for c in reversed(e.cycle)))
               for e in g.edges)
    return LabelledGraph(vs, es)


def euler_number(g: LabelledGraph) -> int:
    """Euler number of the oriented bundle read off the graph:
    sum of sign(v) * chi(v) plus the sum of all cycle entries."""
    return sum(v.sign * v.chi for v in g.vertices) + sum(e.tau for e in g.edges)


def total_chi(g: LabelledGraph) -> int:
    """Euler characteristic of the underlying surface: the components of
    M \\ Z partition M up to circles, so the vertex chis sum to chi(M)."""
    return sum(v.chi for v in g.vertices)


# ---------------------------------------------------------------------------
# Equivalence


@dataclass(frozen=True)
class EquivalenceWitness:
    flipped: bool
    vertex_map: tuple    # ((id in g1, id in g2), ...) sorted by first id
    edge_map: tuple

    def to_dict(self):
        return {
            "flipped": self.flipped,
            "vertices": {a: b for a, b in self.vertex_map},
            "edges": {a: b for a, b in self.edge_map},
        }


def _pair_groups(g):
    """Edges grouped by directed endpoint pair (alpha, omega)."""
    groups = {}
    for e in g.edges:
        groups.setdefault((e.alpha, e.omega), []).append(e)
    return groups


def _invariants(g):
    """Per-vertex fingerprint: label, degree, sorted incident cycles."""
    inc = {v.id: [] for v in g.vertices}
    for e in g.edges:
        inc[e.alpha].append(e.cycle)
        inc[e.omega].append(e.cycle)
    return {v.id: (v.sign, v.chi, len(inc[v.id]), tuple(sorted(inc[v.id])))
            for v in g.vertices}


def _isomorphism(g1, g2):
    """Label-preserving multigraph isomorphism with the edge bijection
    commuting with alpha and omega, by backtracking over vertices."""
    if len(g1.vertices) != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return None
    inv1 = _invariants(g1)
    inv2 = _invariants(g2)
    if sorted(inv1.values()) != sorted(inv2.values()):
        return None
    grp1 = _pair_groups(g1)
    grp2 = _pair_groups(g2)
    candidates = {
        a: [b for b in inv2 if inv2[b] == inv1[a]] for a in inv1
    }
    order = sorted(inv1, key=lambda a: (len(candidates[a]), a))
    neigh1 = {v.id: set() for v in g1.vertices}
    for (a, o) in grp1:
        neigh1[a].add(o)
        neigh1[o].add(a)

    assign = {}
    used = set()

    def cycles_between(grp, a, o):
        return sorted(e.cycle for e in grp.get((a, o), ()))

    def consistent(v1, v2):
        sign = g1.vertex(v1).sign
        for w1 in neigh1[v1]:
            if w1 not in assign:
                continue
            w2 = assign[w1]
            pair1 = (v1, w1) if sign == -1 else (w1, v1)
            pair2 = (v2, w2) if sign == -1 else (w2, v2)
            if cycles_between(grp1, *pair1) != cycles_between(grp2, *pair2):
                return False
        return True

    def backtrack(k):
        if k == len(order):
            return True
        v1 = order[k]
        for v2 in candidates[v1]:
            if v2 in used or not consistent(v1, v2):
                continue
            assign[v1] = v2
            used.add(v2)
            if backtrack(k + 1):
                return True
            del assign[v1]
            used.discard(v2)
        return False

    if not backtrack(0):
        return None

    emap = {}
    for (a, o), edges in grp1.items():
        others = list(grp2.get((assign[a], assign[o]), ()))
        if len(others) != len(edges):
            return None
        for e1, e2 in zip(sorted(edges, key=lambda e: (e.cycle, e.id)),
                          sorted(others, key=lambda e: (e.cycle, e.id))):
            if e1.cycle != e2.cycle:
                return None
            emap[e1.id] = e2.id
    vmap = tuple(sorted(assign.items()))
    return vmap, tuple(sorted(emap.items()))


def equivalent(g1: LabelledGraph, g2: LabelledGraph):
    """Witness of label-preserving isomorphism between g1 and g2, trying
    g2 as given first and then its orientation flip; None if neither
    matches."""
    m = _isomorphism(g1, g2)
    if m is not None:
        return EquivalenceWitness(False, *m)
    m = _isomorphism(g1, flip(g2))
    if m is not None:
        return EquivalenceWitness(True, *m)
    return None


def verify_witness(g1: LabelledGraph, g2: LabelledGraph,
                   w: EquivalenceWitness) -> bool:
    """Independent check that a witness really is a label-preserving
    isomorphism commuting with alpha and omega."""
    target = flip(g2) if w.flipped else g2
    u = dict(w.vertex_map)
    k = dict(w.edge_map)
    if sorted(u) != sorted(v.id for v in g1.vertices):
        return False
    if sorted(u.values()) != sorted(v.id for v in target.vertices):
        return False
    if sorted(k) != sorted(e.id for e in g1.edges):
        return False
    if sorted(k.values()) != sorted(e.id for e in target.edges):
        return False
    tv = {v.id: v for v in target.vertices}
    te = {e.id: e for e in target.edges}
    for v in g1.vertices:
        img = tv[u[v.id]]
        if (v.sign, v.chi) != (img.sign, img.chi):
            return False
    for e in g1.edges:
        img = te[k[e.id]]
        if e.cycle != img.cycle:
            return False
        if u[e.alpha] != img.alpha or u[e.omega] != img.omega:
            return False
    return True


# ---------------------------------------------------------------------------
# Graph construction from a traced structure


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def build_graph(s: ArsSpec, curves, resolution: int) -> LabelledGraph:
    """Construct the labelled graph: flood-fill the sign regions of
    orientation * det on a periodic grid, compute each component's Euler
    characteristic from its node subcomplex (V - E + F), and attach one
    edge per curve with endpoints read off just left and right of the
    walking direction.

    Requires a torus chart and curves with tangencies populated.
    """
    if not s.chart.is_torus:
        raise SpecError("graph construction requires a compact (torus) chart")
    n = resolution
    xs, ys = s.chart.grid(n)
    hx, hy = s.chart.grid_steps(n)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    F = ex.compile_grid(det_frame(s))(xg, yg)
    pos = (s.orientation * F) >= 0.0

    lp, n_pos = ndimage.label(pos)
    ln, n_neg = ndimage.label(~pos)
    L = np.where(pos, lp - 1, n_pos + ln - 1)   # dense labels 0 .. n_pos+n_neg-1
    uf = _UnionFind(n_pos + n_neg)
    for j in range(n):   # x-seam: columns n-1 and 0 are adjacent
        if pos[0, j] == pos[n - 1, j]:
            uf.union(int(L[0, j]), int(L[n - 1, j]))
    for i in range(n):   # y-seam
        if pos[i, 0] == pos[i, n - 1]:
            uf.union(int(L[i, 0]), int(L[i, n - 1]))
    roots = np.array([uf.find(k) for k in range(n_pos + n_neg)])
    root_ids = {}
    for r in roots:
        root_ids.setdefault(int(r), len(root_ids))
    lut = np.array([root_ids[int(r)] for r in roots])
    C = lut[L]

    nreg = len(root_ids)
    region_sign = np.zeros(nreg, int)
    for k in range(n_pos + n_neg):
        region_sign[lut[k]] = 1 if k < n_pos else -1

    V = np.bincount(C.ravel(), minlength=nreg)
    right = np.roll(C, -1, axis=0)
    up = np.roll(C, -1, axis=1)
    diag = np.roll(right, -1, axis=1)
    eh = C == right
    ev = C == up
    E = np.bincount(C[eh], minlength=nreg) + np.bincount(C[ev], minlength=nreg)
    fmask = eh & ev & (C == diag)
    Fc = np.bincount(C[fmask], minlength=nreg)
    chi = V - E + Fc

    first = np.full(nreg, n * n, int)   # first node of each region, row-major
    np.minimum.at(first, C.ravel(), np.arange(n * n))

    ordering = sorted(range(nreg), key=lambda r: (-region_sign[r], first[r]))
    vid = {}
    vertices = []
    counts = {1: 0, -1: 0}
    for r in ordering:
        sign = int(region_sign[r])
        name = ("p%d" if sign > 0 else "n%d") % counts[sign]
        counts[sign] += 1
        vid[r] = name
        vertices.append(GraphVertex(name, sign, int(chi[r])))

    def region_votes(px, py):
        ii = np.mod(np.rint((px - xs[0]) / hx).astype(int), n)
        jj = np.mod(np.rint((py - ys[0]) / hy).astype(int), n)
        return C[ii, jj]

    edges = []
    off = 0.75 * max(hx, hy)
    for w in sorted(curves, key=lambda c: c.component):
        p = w.as_array()
        if w.closed:
            d = np.roll(p, -1, axis=0) - p
            d[-1] = s.chart.delta(s.chart.wrap(*w.points[-1]),
                                  s.chart.wrap(*w.points[0]))
        else:
            d = np.diff(p, axis=0)
        nl = np.hypot(d[:, 0], d[:, 1])
        keep = nl > 0
        d = d[keep]
        nl = nl[keep]
        mids = p[:len(keep)][keep] + d / 2
        nxl = -d[:, 1] / nl
        nyl = d[:, 0] / nl
        sides = {}
        for side, sgn_off in (("left", +1.0), ("right", -1.0)):
            votes = region_votes(mids[:, 0] + sgn_off * off * nxl,
                                 mids[:, 1] + sgn_off * off * nyl)
            count = np.bincount(votes, minlength=nreg)
            top = int(np.argmax(count))
            if count[top] < 0.8 * len(votes):
                raise AdjacencyAmbiguous(
                    "component %d: %s side votes split %s"
                    % (w.component, side, count[count > 0]))
            sides[side] = top
        if region_sign[sides["left"]] != 1 or region_sign[sides["right"]] != -1:
            raise AdjacencyAmbiguous(
                "component %d does not separate an M- region from an M+ region"
                % w.component)
        cyc = tuple(t.contribution for t in w.tangencies)
        edges.append(GraphEdge("e%d" % w.component,
                               vid[sides["right"]], vid[sides["left"]], cyc))

    return LabelledGraph(tuple(vertices), tuple(edges))


# ---------------------------------------------------------------------------
# Serialization


def graph_to_json(g: LabelledGraph) -> str:
    doc = {
        "vertices": [
            {"id": v.id, "sign": v.sign, "chi": v.chi}
            for v in sorted(g.vertices, key=lambda v: v.id)
        ],
        "edges": [
            {"id": e.id, "alpha": e.alpha, "omega": e.omega,
             "cycle": list(e.cycle)}
            for e in sorted(g.edges, key=lambda e: e.id)
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def graph_from_json(text: str) -> LabelledGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError("invalid JSON: %s" % e) from e
    try:
        vs = tuple(GraphVertex(str(v["id"]), int(v["sign"]), int(v["chi"]))
                   for v in doc["vertices"])
        es = tuple(GraphEdge(str(e["id"]), str(e["alpha"]), str(e["omega"]),
                             tuple(int(c) for c in e.get("cycle", ())))
                   for e in doc["edges"])
    except (KeyError, TypeError, ValueError) as e:
        raise SpecError("malformed graph document: %s" % e) from e
    return LabelledGraph(vs, es)


def _sign_str(v: int) -> str:
    return "+1" if v > 0 else "-1"


def graph_to_dot(g: LabelledGraph) -> str:
    lines = ["digraph ars2d {"]
    for v in sorted(g.vertices, key=lambda v: v.id):
        lines.append('  "%s" [label="%s,%d"];' % (v.id, _sign_str(v.sign), v.chi))
    for e in sorted(g.edges, key=lambda e: e.id):
        label = "(" + ",".join(_sign_str(c) for c in e.cycle) + ")"
        lines.append('  "%s" -> "%s" [label="%s"];' % (e.alpha, e.omega, label))
    lines.append("}")
    return "\n".join(lines) + "\n"
