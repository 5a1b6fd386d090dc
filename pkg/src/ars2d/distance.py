"""Carnot-Caratheodory distance estimation and geodesic shooting.

The distance is approximated by Dijkstra on a regular lattice with a
16-direction stencil; each edge is priced by the minimal control norm
realizing the step vector at the edge midpoint, so edges transverse to
the singular locus become expensive and edges outside the span are
dropped.  Normal geodesics integrate the Hamiltonian
H = ((p.X)^2 + (p.Y)^2) / 2 with fixed-step RK4; they serve as oracles
for the grid estimates, not as a distance algorithm.  Ball-Box scaling
exponents come from a log-log fit of grid distances against the snapped
step sizes.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _sparse_dijkstra

from . import expr as ex
from .errors import InadmissibleSample, SpecError, StepUnstable, Unreachable
from .model import (
    ArsSpec,
    DEFAULT_RESOLUTION,
    Tolerances,
    default_tolerances,
)

__all__ = [
    "AdmissibleCurve",
    "GridSolution",
    "solve_grid",
    "cc_distance_grid",
    "geodesic_shoot",
    "curve_length",
    "ballbox_exponent",
]

# offsets (in grid cells) of the 16-neighbor stencil, one per direction
# class; arcs are added in both orientations with the same weight
_STENCIL = ((1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1))


def _min_norm_cost_sq(s: ArsSpec, px, py, vx, vy, tol: Tolerances):
    """Vectorized g_p(v): squared minimal control norm with aX + bY = v,
    or +inf where v leaves the span of the frame.

    Where the frame is safely independent the 2x2 system is solved
    exactly; in the near-parallel regime the span is represented by the
    larger field and the minimal-norm coefficients have a closed form.
    """
    px = np.asarray(px, float)
    py = np.asarray(py, float)
    x1, x2 = s.X.on_grid(px, py)
    y1, y2 = s.Y.on_grid(px, py)
    vx = np.broadcast_to(np.asarray(vx, float), px.shape)
    vy = np.broadcast_to(np.asarray(vy, float), px.shape)
    det = x1 * y2 - x2 * y1
    nx2 = x1 * x1 + x2 * x2
    ny2 = y1 * y1 + y2 * y2
    nv = np.hypot(vx, vy)
    exact = np.abs(det) > 1e-13 * np.sqrt(nx2 * ny2)

    with np.errstate(divide="ignore", invalid="ignore"):
        a = (vx * y2 - vy * y1) / det
        b = (x1 * vy - x2 * vx) / det
        cost_exact = a * a + b * b

        # rank <= 1: project onto the dominant field's line
        use_x = nx2 >= ny2
        ux = np.where(use_x, x1, y1)
        uy = np.where(use_x, x2, y2)
        un2 = np.maximum(ux * ux + uy * uy, 1e-300)
        perp = np.abs(ux * vy - uy * vx) / np.sqrt(un2)
        coef = (ux * vx + uy * vy) / un2          # v = coef * u when parallel
        cost_rank1 = coef * coef * un2 * un2 / np.maximum(un2 * (nx2 + ny2), 1e-300)
        # simplification: (coef*|u|)^2 / (|X|^2 + |Y|^2)
        admissible = (perp <= tol.span_rel * np.maximum(nv, 1e-300)) & (un2 > 1e-300)

    out = np.where(exact, cost_exact, np.where(admissible, cost_rank1, np.inf))
    out = np.where(nv == 0.0, 0.0, out)
    return out


@dataclass(frozen=True, eq=False)
class GridSolution:
    """Single-source shortest-path field on the lattice."""

    spec: ArsSpec
    resolution: int
    source: tuple            # requested source point
    source_node: tuple       # snapped (i, j)
    distances: np.ndarray    # (n, n), inf where unreachable
    predecessors: np.ndarray

    def node_of(self, p):
        return _snap(self.spec.chart, p, self.resolution)

    def node_point(self, ij):
        xs, ys = self.spec.chart.grid(self.resolution)
        return (float(xs[ij[0]]), float(ys[ij[1]]))

    def distance_to(self, q) -> float:
        i, j = self.node_of(q)
        return float(self.distances[i, j])

    def path_to(self, q):
        """Node polyline from the source to q, following predecessors."""
        n = self.resolution
        idx = self.node_of(q)[0] * n + self.node_of(q)[1]
        if not math.isfinite(self.distances.ravel()[idx]):
            raise Unreachable(self.source, q, self.resolution)
        chain = [idx]
        while True:
            prev = int(self.predecessors.ravel()[chain[-1]])
            if prev < 0:
                break
            chain.append(prev)
        chain.reverse()
        return [self.node_point(divmod(k, n)) for k in chain]


def _snap(chart, p, resolution):
    xs, ys = chart.grid(resolution)
    hx, hy = chart.grid_steps(resolution)
    i = int(np.rint((p[0] - xs[0]) / hx))
    j = int(np.rint((p[1] - ys[0]) / hy))
    if chart.is_torus:
        return (i % resolution, j % resolution)
    return (min(max(i, 0), resolution - 1), min(max(j, 0), resolution - 1))


def _build_csr(s: ArsSpec, resolution: int, tol: Tolerances):
    n = resolution
    xs, ys = s.chart.grid(n)
    hx, hy = s.chart.grid_steps(n)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    node = (np.arange(n * n).reshape(n, n)).astype(np.int32)
    rows, cols, data = [], [], []
    torus = s.chart.is_torus
    for di, dj in _STENCIL:
        vx = di * hx
        vy = dj * hy
        mx = xg + vx / 2
        my = yg + vy / 2
        w = np.sqrt(_min_norm_cost_sq(s, mx, my, vx, vy, tol))
        if torus:
            to = np.roll(np.roll(node, -di, axis=0), -dj, axis=1)
            ok = np.isfinite(w)
        else:
            to = np.full((n, n), -1, np.int32)
            si = slice(None, -di) if di > 0 else slice(-di, None)
            sj = slice(None, -dj) if dj > 0 else (slice(-dj, None) if dj < 0 else slice(None))
            ti = slice(di, None) if di > 0 else slice(None, di or None)
            tj = slice(dj, None) if dj > 0 else (slice(None, dj) if dj < 0 else slice(None))
            to[si, sj] = node[ti, tj]
            ok = np.isfinite(w) & (to >= 0)
        fr = node[ok]
        t = to[ok]
        ww = w[ok]
        rows.append(fr)
        cols.append(t)
        data.append(ww)
        rows.append(t)
        cols.append(fr)
        data.append(ww)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    return csr_matrix((data, (rows, cols)), shape=(n * n, n * n))


_cache: OrderedDict = OrderedDict()
_CACHE_MAX = 8


def solve_grid(s: ArsSpec, p, resolution: int,
               tol: Tolerances | None = None) -> GridSolution:
    """Dijkstra from the node nearest p; solutions are memoized so that
    repeated queries from one source (distance pairs, Ball-Box fits)
    cost a single solve."""
    tol = tol or default_tolerances()
    if resolution < 128:
        raise SpecError("distance grid needs resolution >= 128, got %d" % resolution)
    if not s.chart.contains(p[0], p[1]):
        raise SpecError("point (%g, %g) outside the chart" % (p[0], p[1]))
    src = _snap(s.chart, p, resolution)
    key = (s, resolution, src, tol)
    hit = _cache.get(key)
    if hit is not None:
        _cache.move_to_end(key)
        return hit
    g = _build_csr(s, resolution, tol)
    dist, pred = _sparse_dijkstra(g, indices=src[0] * resolution + src[1],
                                  return_predecessors=True)
    sol = GridSolution(s, resolution, (float(p[0]), float(p[1])), src,
                       dist.reshape(resolution, resolution),
                       pred.reshape(resolution, resolution).astype(np.int64))
    _cache[key] = sol
    if len(_cache) > _CACHE_MAX:
        _cache.popitem(last=False)
    return sol


def cc_distance_grid(s: ArsSpec, p, q, resolution: int,
                     tol: Tolerances | None = None) -> float:
    """Node-snapped estimate of the Carnot-Caratheodory distance."""
    if not s.chart.contains(q[0], q[1]):
        raise SpecError("point (%g, %g) outside the chart" % (q[0], q[1]))
    sol = solve_grid(s, p, resolution, tol)
    d = sol.distance_to(q)
    if not math.isfinite(d):
        raise Unreachable(tuple(p), tuple(q), resolution)
    return d


# ---------------------------------------------------------------------------
# Normal geodesics


@dataclass(frozen=True, eq=False)
class AdmissibleCurve:
    """Sampled curve with per-sample control coefficients (a, b), the
    components of the velocity in the frame: dq/dt = a X + b Y."""

    times: np.ndarray      # (m,)
    points: np.ndarray     # (m, 2)
    controls: np.ndarray   # (m, 2)

    @property
    def endpoint(self):
        return (float(self.points[-1, 0]), float(self.points[-1, 1]))

    def reconstruction_defect(self, s: ArsSpec) -> float:
        """Max per-step mismatch between the position increments and the
        trapezoid integral of the frame velocity a X + b Y."""
        x1, x2 = s.X.on_grid(self.points[:, 0], self.points[:, 1])
        y1, y2 = s.Y.on_grid(self.points[:, 0], self.points[:, 1])
        vx = self.controls[:, 0] * x1 + self.controls[:, 1] * y1
        vy = self.controls[:, 0] * x2 + self.controls[:, 1] * y2
        dt = np.diff(self.times)
        ex_ = np.diff(self.points[:, 0]) - (vx[:-1] + vx[1:]) / 2 * dt
        ey_ = np.diff(self.points[:, 1]) - (vy[:-1] + vy[1:]) / 2 * dt
        if len(dt) == 0:
            return 0.0
        return float(np.max(np.hypot(ex_, ey_)))


def _hamiltonian_fields(s: ArsSpec):
    comps = [s.X.e1, s.X.e2, s.Y.e1, s.Y.e2]
    fns = [ex.compile_scalar(e) for e in comps]
    d_dx = [ex.compile_scalar(ex.differentiate(e, "x")) for e in comps]
    d_dy = [ex.compile_scalar(ex.differentiate(e, "y")) for e in comps]
    return fns, d_dx, d_dy


def geodesic_shoot(s: ArsSpec, p, p0, T: float, steps: int,
                   tol: Tolerances | None = None) -> AdmissibleCurve:
    """Integrate the normal geodesic from p with initial covector p0 for
    time T using fixed-step RK4; controls a = p.X, b = p.Y are recorded
    at every sample.  Raises StepUnstable if the Hamiltonian drifts by
    more than the allowed relative tolerance."""
    tol = tol or default_tolerances()
    if steps < 1 or T <= 0:
        raise SpecError("need T > 0 and steps >= 1")
    fns, d_dx, d_dy = _hamiltonian_fields(s)

    def rhs(state):
        x, y, px_, py_ = state
        X1, X2, Y1, Y2 = (f(x, y) for f in fns)
        a = px_ * X1 + py_ * X2
        b = px_ * Y1 + py_ * Y2
        X1x, X2x, Y1x, Y2x = (f(x, y) for f in d_dx)
        X1y, X2y, Y1y, Y2y = (f(x, y) for f in d_dy)
        return (
            a * X1 + b * Y1,
            a * X2 + b * Y2,
            -(a * (px_ * X1x + py_ * X2x) + b * (px_ * Y1x + py_ * Y2x)),
            -(a * (px_ * X1y + py_ * X2y) + b * (px_ * Y1y + py_ * Y2y)),
        )

    def controls_energy(state):
        x, y, px_, py_ = state
        X1, X2, Y1, Y2 = (f(x, y) for f in fns)
        a = px_ * X1 + py_ * X2
        b = px_ * Y1 + py_ * Y2
        return a, b, (a * a + b * b) / 2

    state = (float(p[0]), float(p[1]), float(p0[0]), float(p0[1]))
    a0, b0, H0 = controls_energy(state)
    if H0 <= 0.0:
        raise SpecError("initial Hamiltonian vanishes; covector annihilates the frame")
    dt = T / steps
    times = np.empty(steps + 1)
    pts = np.empty((steps + 1, 2))
    ctl = np.empty((steps + 1, 2))
    times[0] = 0.0
    pts[0] = state[:2]
    ctl[0] = (a0, b0)
    drift = 0.0
    for k in range(steps):
        k1 = rhs(state)
        s2 = tuple(state[i] + dt / 2 * k1[i] for i in range(4))
        k2 = rhs(s2)
        s3 = tuple(state[i] + dt / 2 * k2[i] for i in range(4))
        k3 = rhs(s3)
        s4 = tuple(state[i] + dt * k3[i] for i in range(4))
        k4 = rhs(s4)
        state = tuple(state[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
                      for i in range(4))
        a, b, H = controls_energy(state)
        drift = max(drift, abs(H - H0))
        times[k + 1] = (k + 1) * dt
        pts[k + 1] = state[:2]
        ctl[k + 1] = (a, b)
    if drift / H0 > tol.h_drift:
        raise StepUnstable("Hamiltonian drift %.3g relative exceeds %.3g"
                           % (drift / H0, tol.h_drift))
    return AdmissibleCurve(times, pts, ctl)


def curve_length(s: ArsSpec, c: AdmissibleCurve,
                 tol: Tolerances | None = None) -> float:
    """Length of an admissible curve: trapezoid quadrature of
    sqrt(g(velocity)) with the velocity reconstructed from the controls."""
    tol = tol or default_tolerances()
    x1, x2 = s.X.on_grid(c.points[:, 0], c.points[:, 1])
    y1, y2 = s.Y.on_grid(c.points[:, 0], c.points[:, 1])
    vx = c.controls[:, 0] * x1 + c.controls[:, 1] * y1
    vy = c.controls[:, 0] * x2 + c.controls[:, 1] * y2
    cost = _min_norm_cost_sq(s, c.points[:, 0], c.points[:, 1], vx, vy, tol)
    if not np.all(np.isfinite(cost)):
        k = int(np.argmax(~np.isfinite(cost)))
        raise InadmissibleSample(
            "sample %d at (%g, %g) has velocity outside the span"
            % (k, c.points[k, 0], c.points[k, 1]))
    speed = np.sqrt(cost)
    return float(np.trapezoid(speed, c.times))


# ---------------------------------------------------------------------------
# Ball-Box exponents


def ballbox_exponent(s: ArsSpec, p, direction, h_min: float, h_max: float,
                     resolution: int = DEFAULT_RESOLUTION,
                     tol: Tolerances | None = None) -> float:
    """Least-squares slope of log d(p, p + h dir) against log h over 8
    log-spaced steps.

    The regression uses the snapped step sizes actually realized on the
    lattice (distance between the snapped endpoints), which removes the
    dominant quantization bias at small h.
    """
    if h_max / h_min < 16:
        raise SpecError("Ball-Box fit needs h_max / h_min >= 16")
    d = np.asarray(direction, float)
    nd = float(np.hypot(d[0], d[1]))
    if nd == 0:
        raise SpecError("direction must be a nonzero vector")
    d = d / nd
    sol = solve_grid(s, p, resolution, tol)
    p_node = sol.node_point(sol.source_node)
    hs = np.geomspace(h_min, h_max, 8)
    seen = set()
    log_h, log_d = [], []
    for h in hs:
        q = (p[0] + h * d[0], p[1] + h * d[1])
        if not s.chart.contains(q[0], q[1]):
            raise SpecError("step %g leaves the chart" % h)
        node = sol.node_of(q)
        if node in seen:
            continue
        seen.add(node)
        qn = sol.node_point(node)
        h_act = s.chart.distance(p_node, qn)
        dist = float(sol.distances[node])
        if not math.isfinite(dist):
            raise Unreachable(tuple(p), q, resolution)
        if h_act <= 0 or dist <= 0:
            continue
        log_h.append(math.log(h_act))
        log_d.append(math.log(dist))
    if len(log_h) < 3:
        raise SpecError("Ball-Box fit collapsed to %d usable steps" % len(log_h))
    slope = np.polyfit(np.array(log_h), np.array(log_d), 1)[0]
    return float(slope)
