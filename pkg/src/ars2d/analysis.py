"""End-to-end analysis pipeline: locus, tangencies, revolutions, the
genericity check, and (on a torus) the labelled graph and its invariants,
collected into a deterministic JSON-serializable report.

The report carries two independently computed tau values per closed
component (revolutions of the distribution versus the sum of tangency
contributions), so a reader can audit the cross-check rather than trust
it.
"""

from __future__ import annotations

import dataclasses
import json

from .errors import SpecError
from .graph import (
    LabelledGraph,
    build_graph,
    euler_number,
    graph_from_json,
    total_chi,
)
from .locus import find_tangencies, revolutions, trace_locus
from .model import (
    ArsSpec,
    DEFAULT_RESOLUTION,
    Tolerances,
    check_H0,
    default_tolerances,
    spec_digest,
)

__all__ = ["AnalysisReport", "analyze", "report_to_json", "report_from_json"]


@dataclasses.dataclass(frozen=True)
class AnalysisReport:
    """Everything the pipeline established about one structure."""

    digest: str              # identifies the input spec
    resolution: int
    h0: object               # H0Report
    curves: tuple            # SingularCurve with tangencies (and revolutions
                             # when closed) populated
    graph: LabelledGraph | None   # None on plane charts
    tau_total: int           # sum of all tangency contributions
    euler: int | None        # None on plane charts
    total_chi: int | None

    def to_dict(self):
        d = {
            "digest": self.digest,
            "resolution": self.resolution,
            "h0": self.h0.to_dict(),
            "curves": [c.to_dict() for c in self.curves],
            "tau_total": self.tau_total,
            "euler": self.euler,
            "total_chi": self.total_chi,
        }
        if self.graph is None:
            d["graph"] = None
        else:
            d["graph"] = {
                "vertices": [{"id": v.id, "sign": v.sign, "chi": v.chi}
                             for v in sorted(self.graph.vertices, key=lambda v: v.id)],
                "edges": [{"id": e.id, "alpha": e.alpha, "omega": e.omega,
                           "cycle": list(e.cycle)}
                          for e in sorted(self.graph.edges, key=lambda e: e.id)],
            }
        return d


def analyze(s: ArsSpec, resolution: int = DEFAULT_RESOLUTION,
            tol: Tolerances | None = None) -> AnalysisReport:
    """Run the full pipeline on one structure.

    Closed components get their revolutions computed; the genericity
    check runs on the traced curves; torus charts additionally get the
    labelled graph, the euler number and the chi total.
    """
    tol = tol or default_tolerances()
    curves = trace_locus(s, resolution, tol)
    enriched = []
    for c in curves:
        c = find_tangencies(s, c, tol)
        if c.closed:
            c = dataclasses.replace(c, revolutions=revolutions(s, c, tol))
        enriched.append(c)
    curves = tuple(enriched)
    h0 = check_H0(s, curves, resolution, tol)
    tau_total = sum(t.contribution for c in curves for t in c.tangencies)
    if s.chart.is_torus:
        g = build_graph(s, curves, resolution)
        return AnalysisReport(spec_digest(s), resolution, h0, curves, g,
                              tau_total, euler_number(g), total_chi(g))
    return AnalysisReport(spec_digest(s), resolution, h0, curves, None,
                          tau_total, None, None)


def report_to_json(r: AnalysisReport) -> str:
    return json.dumps(r.to_dict(), sort_keys=True, indent=2) + "\n"


def report_from_json(text: str) -> dict:
    """Parse a report back; the graph section is reconstructed as a
    LabelledGraph so invariants can be re-checked on the parsed form."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError("malformed report JSON: %s" % e) from e
    for key in ("digest", "resolution", "h0", "curves", "tau_total"):
        if key not in d:
            raise SpecError("report missing field %r" % key)
    if d.get("graph") is not None:
        d["graph"] = graph_from_json(json.dumps(d["graph"]))
    return d
