"""Core model of a 2-dimensional almost-Riemannian structure (2-ARS).

A structure is given on a single chart (flat torus or plane rectangle) by
a pair of vector fields (X, Y), orthonormal by declaration, plus a bundle
orientation sign.  The distribution is Delta = span{X, Y}; its
determinant cuts out the singular locus, Lie brackets build the flag
Delta_2, Delta_3, and the induced metric is the minimal-control quadratic
form g_p(v) = min{a^2 + b^2 : aX(p) + bY(p) = v}.

Everything here is pointwise or symbolic; curve tracing lives in locus,
global topology in graph, distances in distance.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, fields
from enum import Enum
from functools import lru_cache

import numpy as np

from . import expr as ex
from .errors import (
    DegeneratePoint,
    ExprSyntaxError,
    SpecError,
    UnknownIdentifierError,
)

__all__ = [
    "Tolerances",
    "default_tolerances",
    "SurfaceChart",
    "VectorField",
    "ArsSpec",
    "PointClass",
    "H0Report",
    "H0Failure",
    "DEFAULT_RESOLUTION",
    "lie_bracket",
    "det_frame",
    "classify_point",
    "metric_cost",
    "check_H0",
    "fixture",
    "FIXTURE_NAMES",
    "spec_from_json",
    "spec_to_json",
    "spec_digest",
]

DEFAULT_RESOLUTION = 512


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds used across the pipeline.

    All fields are scaled uniformly by the ARS2D_TOL_SCALE environment
    variable through default_tolerances(); values > 1 loosen every check.
    """

    det_rel: float = 1e-8        # ordinary-point cutoff, relative to |frame|^2 at the point
    rank_ratio: float = 1e-6     # singular-value ratio deciding numeric rank 2
    span_rel: float = 1e-7       # admissibility residual, relative to |v|
    refine_rel: float = 1e-10    # on-curve |det| target, relative to grid frame scale
    lift_step: float = math.pi / 4   # max jump between consecutive angle-lift samples
    degree_residual: float = 0.1     # max distance of lift total / pi from an integer
    arc_rel: float = 1e-9        # tangency bisection arc tolerance, relative to period
    periodicity: float = 1e-9    # torus boundary identification mismatch
    h_drift: float = 1e-6        # relative Hamiltonian drift allowed while shooting
    curve_tol: float = 1e-6      # admissible-curve reconstruction defect per step
    newton_cap: int = 20         # Newton iterations before giving up

    def scaled(self, factor: float) -> "Tolerances":
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v * factor if isinstance(v, float) else v
        return Tolerances(**out)


def default_tolerances() -> Tolerances:
    """Baseline Tolerances times the ARS2D_TOL_SCALE env var (default 1)."""
    scale = float(os.environ.get("ARS2D_TOL_SCALE", "1") or "1")
    tol = Tolerances()
    if scale != 1.0:
        tol = tol.scaled(scale)
    return tol


# ---------------------------------------------------------------------------
# Charts


@dataclass(frozen=True)
class SurfaceChart:
    """Flat torus R^2/(L_x Z x L_y Z) or a plane rectangle.

    Torus charts are compact with the standard (x, y) orientation; plane
    charts only support local analysis (no global graph construction).
    """

    kind: str  # "torus" | "plane"
    x_range: tuple   # torus: (0, Lx); plane: (xmin, xmax)
    y_range: tuple

    @staticmethod
    def torus(Lx: float = 1.0, Ly: float = 1.0) -> "SurfaceChart":
        if Lx <= 0 or Ly <= 0:
            raise SpecError("torus periods must be positive, got (%g, %g)" % (Lx, Ly))
        return SurfaceChart("torus", (0.0, float(Lx)), (0.0, float(Ly)))

    @staticmethod
    def plane(xmin: float, xmax: float, ymin: float, ymax: float) -> "SurfaceChart":
        if not (xmin < xmax and ymin < ymax):
            raise SpecError("empty plane domain")
        return SurfaceChart("plane", (float(xmin), float(xmax)), (float(ymin), float(ymax)))

    @property
    def is_torus(self) -> bool:
        return self.kind == "torus"

    @property
    def periods(self):
        return (self.x_range[1], self.y_range[1])

    @property
    def spans(self):
        return (self.x_range[1] - self.x_range[0], self.y_range[1] - self.y_range[0])

    def wrap(self, x: float, y: float):
        """Reduce torus coordinates to the fundamental domain; identity on planes."""
        if not self.is_torus:
            return (x, y)
        Lx, Ly = self.periods
        return (x % Lx, y % Ly)

    def contains(self, x: float, y: float) -> bool:
        if self.is_torus:
            return True
        return (self.x_range[0] <= x <= self.x_range[1]
                and self.y_range[0] <= y <= self.y_range[1])

    def delta(self, p, q):
        """Displacement q - p, shortest representative on the torus."""
        dx = q[0] - p[0]
        dy = q[1] - p[1]
        if self.is_torus:
            Lx, Ly = self.periods
            dx = (dx + Lx / 2) % Lx - Lx / 2
            dy = (dy + Ly / 2) % Ly - Ly / 2
        return (dx, dy)

    def distance(self, p, q) -> float:
        dx, dy = self.delta(p, q)
        return math.hypot(dx, dy)

    def grid(self, resolution: int):
        """Node coordinates: torus grids omit the identified right/top edge."""
        x0, x1 = self.x_range
        y0, y1 = self.y_range
        if self.is_torus:
            xs = np.linspace(x0, x1, resolution, endpoint=False)
            ys = np.linspace(y0, y1, resolution, endpoint=False)
        else:
            xs = np.linspace(x0, x1, resolution)
            ys = np.linspace(y0, y1, resolution)
        return xs, ys

    def grid_steps(self, resolution: int):
        sx, sy = self.spans
        if self.is_torus:
            return sx / resolution, sy / resolution
        return sx / (resolution - 1), sy / (resolution - 1)


# ---------------------------------------------------------------------------
# Vector fields and structures


@dataclass(frozen=True)
class VectorField:
    e1: ex.Expr
    e2: ex.Expr

    @staticmethod
    def parse(c1: str, c2: str) -> "VectorField":
        return VectorField(ex.parse(c1), ex.parse(c2))

    def __call__(self, x: float, y: float):
        return (ex.compile_scalar(self.e1)(x, y), ex.compile_scalar(self.e2)(x, y))

    def on_grid(self, xg, yg):
        return (ex.compile_grid(self.e1)(xg, yg), ex.compile_grid(self.e2)(xg, yg))

    def strings(self):
        return (ex.to_string(self.e1), ex.to_string(self.e2))


@dataclass(frozen=True)
class ArsSpec:
    """A 2-ARS on a chart: orthonormal frame (X, Y) plus bundle orientation.

    orientation = +1 means (X, Y) is a positive frame of the bundle; the
    region M+ is where orientation * det(X, Y) > 0.
    """

    chart: SurfaceChart
    X: VectorField
    Y: VectorField
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (-1, 1):
            raise SpecError("bundle orientation must be +1 or -1")


class PointClass(Enum):
    ORDINARY = "ordinary"
    GRUSHIN = "grushin"
    TANGENCY = "tangency"


# ---------------------------------------------------------------------------
# Symbolic layer: determinant, brackets, flag


@lru_cache(maxsize=256)
def det_frame(s: ArsSpec) -> ex.Expr:
    """det(X, Y) as an expression; Z is its zero set and
    sign(orientation * det) separates M+ from M-."""
    return ex.sub(ex.mul(s.X.e1, s.Y.e2), ex.mul(s.X.e2, s.Y.e1))


def lie_bracket(V: VectorField, W: VectorField) -> VectorField:
    """[V, W] = (DW)V - (DV)W, componentwise via symbolic differentiation."""

    def d_along(f, U):
        return ex.add(ex.mul(U.e1, ex.differentiate(f, "x")),
                      ex.mul(U.e2, ex.differentiate(f, "y")))

    return VectorField(
        ex.sub(d_along(W.e1, V), d_along(V.e1, W)),
        ex.sub(d_along(W.e2, V), d_along(V.e2, W)),
    )


@lru_cache(maxsize=256)
def flag_fields(s: ArsSpec):
    """(B, [X,B], [Y,B]) with B = [X, Y]: generators of Delta_2 and Delta_3
    beyond the frame itself."""
    B = lie_bracket(s.X, s.Y)
    return B, lie_bracket(s.X, B), lie_bracket(s.Y, B)


@lru_cache(maxsize=256)
def det_gradient(s: ArsSpec):
    d = det_frame(s)
    return ex.differentiate(d, "x"), ex.differentiate(d, "y")


# ---------------------------------------------------------------------------
# Pointwise operations


def _rank2(cols, ratio) -> bool:
    """Numeric rank-2 test for a 2xN column stack via Gram eigenvalues."""
    u = cols[0]
    v = cols[1]
    g11 = float(np.dot(u, u))
    g12 = float(np.dot(u, v))
    g22 = float(np.dot(v, v))
    tr = g11 + g22
    if tr <= 0.0:
        return False
    disc = max((g11 - g22) ** 2 + 4 * g12 * g12, 0.0)
    root = math.sqrt(disc)
    lam1 = (tr + root) / 2
    lam2 = max((tr - root) / 2, 0.0)
    return math.sqrt(lam2 / lam1) > ratio


def classify_point(s: ArsSpec, p, tol: Tolerances | None = None) -> PointClass:
    """Ordinary, Grushin, or tangency class of p per the flag dimensions.

    Raises DegeneratePoint when even the second brackets fail to span,
    i.e. Delta_3(p) is not the full tangent plane.
    """
    tol = tol or default_tolerances()
    x, y = s.chart.wrap(p[0], p[1])
    Xv = np.array(s.X(x, y))
    Yv = np.array(s.Y(x, y))
    scale = max(float(Xv @ Xv), float(Yv @ Yv), 1e-300)
    det = Xv[0] * Yv[1] - Xv[1] * Yv[0]
    if abs(det) > tol.det_rel * scale:
        return PointClass.ORDINARY
    B, BX, BY = flag_fields(s)
    Bv = np.array(B(x, y))
    if _rank2(np.column_stack([Xv, Yv, Bv]), tol.rank_ratio):
        return PointClass.GRUSHIN
    cols = np.column_stack([Xv, Yv, Bv, np.array(BX(x, y)), np.array(BY(x, y))])
    if _rank2(cols, tol.rank_ratio):
        return PointClass.TANGENCY
    raise DegeneratePoint((x, y))


def metric_cost(s: ArsSpec, p, v, tol: Tolerances | None = None) -> float:
    """g_p(v): squared minimal control norm with aX(p) + bY(p) = v.

    Returns +inf when v is not in the span of the frame at p (the
    direction is inadmissible); never raises.
    """
    tol = tol or default_tolerances()
    x, y = s.chart.wrap(p[0], p[1])
    vv = np.asarray(v, float)
    nv = float(np.hypot(vv[0], vv[1]))
    if nv == 0.0:
        return 0.0
    Xv = s.X(x, y)
    Yv = s.Y(x, y)
    A = np.array([[Xv[0], Yv[0]], [Xv[1], Yv[1]]])
    coef, _, _, _ = np.linalg.lstsq(A, vv, rcond=None)
    resid = float(np.linalg.norm(A @ coef - vv))
    if resid > tol.span_rel * nv:
        return math.inf
    return float(coef @ coef)


# ---------------------------------------------------------------------------
# Grid helpers shared with the locus / distance modules


def grid_frame_scale(s: ArsSpec, resolution: int = 64) -> float:
    """max |X| * max |Y| over a coarse grid; the natural magnitude of det."""
    xs, ys = s.chart.grid(resolution)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    x1, x2 = s.X.on_grid(xg, yg)
    y1, y2 = s.Y.on_grid(xg, yg)
    mx = float(np.max(np.hypot(x1, x2)))
    my = float(np.max(np.hypot(y1, y2)))
    return max(mx * my, 1e-30)


# ---------------------------------------------------------------------------
# Hypothesis (H0)


@dataclass(frozen=True)
class H0Failure:
    clause: str          # "regular" | "isolated" | "bracket_full"
    point: tuple
    detail: str


@dataclass(frozen=True)
class H0Report:
    regular: bool
    isolated: bool
    bracket_full: bool
    failures: tuple

    @property
    def ok(self) -> bool:
        return self.regular and self.isolated and self.bracket_full

    def to_dict(self):
        return {
            "ok": self.ok,
            "regular": self.regular,
            "isolated": self.isolated,
            "bracket_full": self.bracket_full,
            "failures": [
                {"clause": f.clause, "point": list(f.point), "detail": f.detail}
                for f in self.failures
            ],
        }


def check_H0(s: ArsSpec, curves, resolution: int = 256,
             tol: Tolerances | None = None) -> H0Report:
    """Verify the genericity hypothesis: (i) 0 is a regular value of
    det(X, Y), (ii) tangency points are isolated, (iii) Delta_3 is full at
    every tangency.  Failures are returned as data, never raised.

    The regular-value check combines the traced curves with a whole-grid
    scan: a degenerate zero (such as det = x^2) produces no sign change
    and hence no curve, so curves alone cannot witness it.  The scan flags
    nodes where both |det| and |grad det| are below what a nonzero
    gradient would force at distance one grid step, using a global bound
    on the second derivatives.
    """
    tol = tol or default_tolerances()
    failures = []

    xs, ys = s.chart.grid(resolution)
    hx, hy = s.chart.grid_steps(resolution)
    h = max(hx, hy)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    d = det_frame(s)
    F = ex.compile_grid(d)(xg, yg)
    dx, dy = det_gradient(s)
    Gx = ex.compile_grid(dx)(xg, yg)
    Gy = ex.compile_grid(dy)(xg, yg)
    Gn = np.hypot(Gx, Gy)
    hess = [ex.differentiate(dx, "x"), ex.differentiate(dx, "y"), ex.differentiate(dy, "y")]
    Hmax = max(float(np.max(np.abs(ex.compile_grid(e)(xg, yg)))) for e in hess)
    tiny = 1e-12 * (1.0 + float(np.max(np.abs(F))))
    thr_f = max(0.5 * Hmax * (2 * h) ** 2, tiny)
    thr_g = max(2.0 * Hmax * h, tiny)

    bad = (np.abs(F) <= thr_f) & (Gn <= thr_g)
    regular = not bool(bad.any())
    if not regular:
        ii, jj = np.nonzero(bad)
        for i, j in list(zip(ii.tolist(), jj.tolist()))[:8]:
            failures.append(H0Failure(
                "regular", (float(xs[i]), float(ys[j])),
                "det and its gradient both vanish to grid accuracy"))

    # traced curve points: gradient must clear the same bound
    for w in curves:
        pts = np.asarray(w.points, float)
        if len(pts) == 0:
            continue
        gx = ex.compile_grid(dx)(pts[:, 0], pts[:, 1])
        gy = ex.compile_grid(dy)(pts[:, 0], pts[:, 1])
        gn = np.hypot(gx, gy)
        k = int(np.argmin(gn))
        if gn[k] <= thr_g:
            regular = False
            failures.append(H0Failure(
                "regular", (float(pts[k, 0]), float(pts[k, 1])),
                "gradient of det below grid threshold on traced locus"))

    tangencies = [t for w in curves for t in w.tangencies]
    isolated = True
    for i in range(len(tangencies)):
        for j in range(i + 1, len(tangencies)):
            sep = s.chart.distance(tangencies[i].location, tangencies[j].location)
            if sep <= h:
                isolated = False
                failures.append(H0Failure(
                    "isolated", tangencies[i].location,
                    "tangency pair separated by %.3g <= grid step %.3g" % (sep, h)))

    bracket_full = True
    for t in tangencies:
        try:
            classify_point(s, t.location, tol)
        except DegeneratePoint:
            bracket_full = False
            failures.append(H0Failure(
                "bracket_full", t.location, "Delta_3 rank-deficient at tangency"))

    return H0Report(regular, isolated, bracket_full, tuple(failures))


# ---------------------------------------------------------------------------
# Validation (periodicity + bracket generation) and JSON interchange


def validate(s: ArsSpec, tol: Tolerances | None = None,
             resolution: int = 25) -> None:
    """Raise SpecError for a frame that is not periodic on a torus chart
    or not Lie-bracket generating at sampled points."""
    tol = tol or default_tolerances()
    if s.chart.is_torus:
        Lx, Ly = s.chart.periods
        ts = np.linspace(0.0, 1.0, 33)
        for vf_name, vf in (("X", s.X), ("Y", s.Y)):
            for comp_name, e in (("1", vf.e1), ("2", vf.e2)):
                f = ex.compile_grid(e)
                for (ax, bx, ay, by, label) in (
                    (np.zeros_like(ts), np.full_like(ts, Lx), ts * Ly, ts * Ly, "x"),
                    (ts * Lx, ts * Lx, np.zeros_like(ts), np.full_like(ts, Ly), "y"),
                ):
                    va = f(ax, ay)
                    vb = f(bx, by)
                    lim = tol.periodicity * (1.0 + float(np.max(np.abs(va))))
                    if float(np.max(np.abs(va - vb))) > lim:
                        raise SpecError(
                            "component %s%s is not %s-periodic on the torus chart"
                            % (vf_name, comp_name, label))

    xs, ys = s.chart.grid(resolution)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    B, BX, BY = flag_fields(s)
    comps = []
    for vf in (s.X, s.Y, B, BX, BY):
        u, v = vf.on_grid(xg, yg)
        comps.append((u, v))
    g11 = sum(u * u for u, _ in comps)
    g12 = sum(u * v for u, v in comps)
    g22 = sum(v * v for _, v in comps)
    tr = g11 + g22
    disc = np.maximum((g11 - g22) ** 2 + 4 * g12 * g12, 0.0)
    root = np.sqrt(disc)
    lam1 = (tr + root) / 2
    lam2 = np.maximum((tr - root) / 2, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sqrt(lam2 / np.maximum(lam1, 1e-300))
    bad = ratio <= tol.rank_ratio
    if bool(bad.any()):
        i, j = np.argwhere(bad)[0]
        raise SpecError(
            "frame is not Lie-bracket generating near (%.4g, %.4g)"
            % (float(xs[i]), float(ys[j])))


def spec_to_json(s: ArsSpec) -> str:
    """Canonical JSON (sorted keys, printed expressions); stable bytes."""
    if s.chart.is_torus:
        surface = {"type": "torus", "periods": list(s.chart.periods)}
    else:
        surface = {"type": "plane",
                   "domain": [list(s.chart.x_range), list(s.chart.y_range)]}
    doc = {
        "surface": surface,
        "frame": {"X": list(s.X.strings()), "Y": list(s.Y.strings())},
        "bundle_orientation": "+" if s.orientation > 0 else "-",
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def spec_from_json(text: str, tol: Tolerances | None = None) -> ArsSpec:
    """Parse and validate an ArsSpec JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError("invalid JSON: %s" % e) from e
    try:
        surf = doc["surface"]
        if surf["type"] == "torus":
            chart = SurfaceChart.torus(*map(float, surf["periods"]))
        elif surf["type"] == "plane":
            (x0, x1), (y0, y1) = surf["domain"]
            chart = SurfaceChart.plane(float(x0), float(x1), float(y0), float(y1))
        else:
            raise SpecError("unknown surface type %r" % (surf["type"],))
        frame = doc["frame"]
        X = VectorField.parse(*frame["X"])
        Y = VectorField.parse(*frame["Y"])
        ori = doc.get("bundle_orientation", "+")
        if ori not in ("+", "-"):
            raise SpecError("bundle_orientation must be '+' or '-'")
    except (KeyError, TypeError, ValueError,
            ExprSyntaxError, UnknownIdentifierError) as e:
        raise SpecError("malformed ArsSpec document: %s" % e) from e
    s = ArsSpec(chart, X, Y, 1 if ori == "+" else -1)
    validate(s, tol)
    return s


def spec_digest(s: ArsSpec) -> str:
    return hashlib.sha256(spec_to_json(s).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Built-in fixtures


FIXTURE_NAMES = (
    "grushin-plane",
    "grushin-torus",
    "tangency-torus",
    "riemannian-torus",
    "F1",
    "F2",
    "F3",
)


def fixture(name: str, phi: str = "0", psi: str = "1", xi: str = "0") -> ArsSpec:
    """Named built-in structures.

    F2 and F3 accept the free functions of their normal forms: phi(x, y)
    with phi(0, y) = 0 for F2, psi(x) with psi(0) > 0 and xi(x, y) for
    F3.  Defaults reduce them to the plain Grushin and parabolic models.
    """
    square = SurfaceChart.plane(-1.0, 1.0, -1.0, 1.0)
    if name == "grushin-plane":
        return ArsSpec(square, VectorField.parse("1", "0"), VectorField.parse("0", "x"))
    if name == "grushin-torus":
        return ArsSpec(SurfaceChart.torus(1.0, 1.0),
                       VectorField.parse("1", "0"),
                       VectorField.parse("0", "sin(2*pi*x)"))
    if name == "tangency-torus":
        return ArsSpec(SurfaceChart.torus(1.0, 1.0),
                       VectorField.parse("1", "0"),
                       VectorField.parse("0", "sin(2*pi*y) - 0.5*cos(2*pi*x)"))
    if name == "riemannian-torus":
        return ArsSpec(SurfaceChart.torus(1.0, 1.0),
                       VectorField.parse("1", "0"),
                       VectorField.parse("0", "1"))
    if name == "F1":
        y2 = "1" if _is_zero(phi) else "exp(%s)" % phi
        return ArsSpec(square, VectorField.parse("1", "0"), VectorField.parse("0", y2))
    if name == "F2":
        y2 = "x" if _is_zero(phi) else "x*exp(%s)" % phi
        return ArsSpec(square, VectorField.parse("1", "0"), VectorField.parse("0", y2))
    if name == "F3":
        core = "y - x^2" if _is_one(psi) else "y - x^2*(%s)" % psi
        y2 = core if _is_zero(xi) else "(%s)*exp(%s)" % (core, xi)
        # shallow y-extent: lattice steps must resolve the quadratic
        # separation between the locus y = x^2 and nearby targets
        shallow = SurfaceChart.plane(-1.0, 1.0, -0.2, 0.2)
        return ArsSpec(shallow, VectorField.parse("1", "0"), VectorField.parse("0", y2))
    raise SpecError("unknown fixture %r (known: %s)" % (name, ", ".join(FIXTURE_NAMES)))


def _is_zero(text):
    try:
        e = ex.parse(text)
    except Exception:
        return False
    return isinstance(e, ex.Num) and e.value == 0.0


def _is_one(text):
    try:
        e = ex.parse(text)
    except Exception:
        return False
    return isinstance(e, ex.Num) and e.value == 1.0


def resolve_spec(source: str, tol: Tolerances | None = None) -> ArsSpec:
    """Interpret a CLI input: fixture name, else a path to ArsSpec JSON."""
    if source in FIXTURE_NAMES:
        return fixture(source)
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return spec_from_json(fh.read(), tol)
    raise SpecError("no such fixture or file: %r" % (source,))
