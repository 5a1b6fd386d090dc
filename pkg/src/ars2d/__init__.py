"""Analysis of two-dimensional almost-Riemannian structures.

A structure is a pair of vector fields (X, Y) on a plane domain or a
torus, Lie-bracket generating, degenerating on the singular locus
Z = {det(X, Y) = 0}.  The package traces Z, classifies its points,
computes tangency contributions and the labelled graph whose equivalence
class captures the structure up to Lipschitz equivalence, and estimates
Carnot-Caratheodory distances.
"""

from .errors import (
    AdjacencyAmbiguous,
    ArsError,
    CurveNotClosed,
    DegeneratePoint,
    DomainError,
    ExprSyntaxError,
    InadmissibleSample,
    LiftUnstable,
    NotRegular,
    SaddleAmbiguity,
    SpecError,
    StepUnstable,
    TangencyNotTransversal,
    UnknownIdentifierError,
    Unreachable,
)
from .expr import (
    compile_grid,
    compile_scalar,
    differentiate,
    evaluate,
    parse,
    to_string,
)
from .model import (
    ArsSpec,
    DEFAULT_RESOLUTION,
    FIXTURE_NAMES,
    H0Report,
    PointClass,
    SurfaceChart,
    Tolerances,
    VectorField,
    check_H0,
    classify_point,
    default_tolerances,
    det_frame,
    fixture,
    lie_bracket,
    metric_cost,
    spec_digest,
    spec_from_json,
    spec_to_json,
)
from .locus import (
    SingularCurve,
    TangencyPoint,
    find_tangencies,
    revolutions,
    trace_locus,
)
from .graph import (
    GRAPH_FIXTURES,
    EquivalenceWitness,
    GraphEdge,
    GraphVertex,
    LabelledGraph,
    build_graph,
    canonical_cycle,
    equivalent,
    euler_number,
    flip,
    graph_from_json,
    graph_to_dot,
    graph_to_json,
    load_graph_fixture,
    total_chi,
    verify_witness,
)
from .distance import (
    AdmissibleCurve,
    GridSolution,
    ballbox_exponent,
    cc_distance_grid,
    curve_length,
    geodesic_shoot,
    solve_grid,
)
from .analysis import AnalysisReport, analyze, report_from_json, report_to_json

__version__ = "0.1.0"

__all__ = [
    "AdjacencyAmbiguous",
    "AdmissibleCurve",
    "AnalysisReport",
    "ArsError",
    "ArsSpec",
    "CurveNotClosed",
    "DEFAULT_RESOLUTION",
    "DegeneratePoint",
    "DomainError",
    "EquivalenceWitness",
    "ExprSyntaxError",
    "FIXTURE_NAMES",
    "GRAPH_FIXTURES",
    "GraphEdge",
    "GraphVertex",
    "GridSolution",
    "H0Report",
    "InadmissibleSample",
    "LabelledGraph",
    "LiftUnstable",
    "NotRegular",
    "PointClass",
    "SaddleAmbiguity",
    "SingularCurve",
    "SpecError",
    "StepUnstable",
    "SurfaceChart",
    "TangencyNotTransversal",
    "TangencyPoint",
    "Tolerances",
    "UnknownIdentifierError",
    "Unreachable",
    "VectorField",
    "analyze",
    "ballbox_exponent",
    "build_graph",
    "canonical_cycle",
    "cc_distance_grid",
    "check_H0",
    "classify_point",
    "compile_grid",
    "compile_scalar",
    "curve_length",
    "default_tolerances",
    "det_frame",
    "differentiate",
    "equivalent",
    "euler_number",
    "evaluate",
    "find_tangencies",
    "fixture",
    "flip",
    "geodesic_shoot",
    "graph_from_json",
    "graph_to_dot",
    "graph_to_json",
    "lie_bracket",
    "load_graph_fixture",
    "metric_cost",
    "parse",
    "report_from_json",
    "report_to_json",
    "revolutions",
    "solve_grid",
    "spec_digest",
    "spec_from_json",
    "spec_to_json",
    "to_string",
    "total_chi",
    "trace_locus",
    "verify_witness",
]
