"""Singular locus tracing and tangency analysis.

The locus Z is the zero set of det(X, Y).  trace_locus extracts it with
marching squares on a regular grid, chains the cell segments into
components, Newton-refines every vertex onto Z, and orients each
component so that M+ (where orientation * det > 0) lies on the left of
the walking direction.

On Z the distribution Delta = span{X, Y} is a line field; tangency
points are where that line aligns with the tangent of Z.  They are found
as zero crossings of the projective angle defect between Delta and the
curve tangent, refined by bisection, and each carries a contribution
of +1 or -1: the sign of the defect's rate of change in walking order.
The number of revolutions of Delta along a closed component is computed
separately from a continuous angle lift, so the degree identity
revolutions = sum of contributions is a genuine cross-check between two
discretizations, not an accounting identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import expr as ex
from .errors import (
    CurveNotClosed,
    LiftUnstable,
    NotRegular,
    SaddleAmbiguity,
    SpecError,
    TangencyNotTransversal,
)
from .model import (
    ArsSpec,
    Tolerances,
    default_tolerances,
    det_frame,
    det_gradient,
    grid_frame_scale,
)

__all__ = [
    "SingularCurve",
    "TangencyPoint",
    "trace_locus",
    "find_tangencies",
    "revolutions",
]


@dataclass(frozen=True)
class TangencyPoint:
    location: tuple          # chart coordinates, wrapped to the fundamental domain
    contribution: int        # +1 or -1
    arc: float               # arc length from the component's first vertex

    def to_dict(self):
        return {
            "location": [self.location[0], self.location[1]],
            "contribution": self.contribution,
            "arc": self.arc,
        }


@dataclass(frozen=True)
class SingularCurve:
    """One connected component of Z as an oriented polyline.

    Points are stored in continuous (unwrapped) coordinates along the
    traversal; consecutive points are one grid cell apart at most.  For a
    closed torus component the traversal returns to the start after
    winding wrap = (wx, wy) times around the periods.
    """

    component: int
    points: tuple            # ((x, y), ...) without repeating the first point
    closed: bool
    wrap: tuple              # (int, int) net winding, (0, 0) on plane charts
    tangencies: tuple = ()
    revolutions: int | None = None

    def as_array(self):
        return np.asarray(self.points, float)

    def arclengths(self):
        """Cumulative arc length at each vertex, starting at 0."""
        p = self.as_array()
        d = np.hypot(*np.diff(p, axis=0).T)
        return np.concatenate([[0.0], np.cumsum(d)])

    def to_dict(self):
        return {
            "component": self.component,
            "closed": self.closed,
            "wrap": list(self.wrap),
            "points": [[p[0], p[1]] for p in self.points],
            "tangencies": [t.to_dict() for t in self.tangencies],
            "revolutions": self.revolutions,
        }


# ---------------------------------------------------------------------------
# Marching squares


def trace_locus(s: ArsSpec, resolution: int,
                tol: Tolerances | None = None):
    """Extract the components of Z = {det(X, Y) = 0} at a grid resolution.

    Returns a list of SingularCurve ordered deterministically (by their
    smallest wrapped vertex).  Torus components are closed; plane
    components may be open arcs ending on the domain boundary.
    """
    tol = tol or default_tolerances()
    if resolution < 64:
        raise SpecError("locus tracing needs resolution >= 64, got %d" % resolution)
    ch = s.chart
    xs, ys = ch.grid(resolution)
    hx, hy = ch.grid_steps(resolution)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    F = ex.compile_grid(det_frame(s))(xg, yg)
    S = np.where(F < 0.0, -1, 1)  # exact zeros count as positive

    torus = ch.is_torus
    n = resolution
    if torus:
        FH = np.roll(F, -1, axis=0)
        FV = np.roll(F, -1, axis=1)
        SH = S * np.roll(S, -1, axis=0)
        SV = S * np.roll(S, -1, axis=1)
        mH = SH < 0
        mV = SV < 0
        with np.errstate(invalid="ignore", divide="ignore"):
            tH = np.where(mH, F / (F - FH), np.nan)
            tV = np.where(mV, F / (F - FV), np.nan)
        ncx = ncy = n
    else:
        mH = (S[:-1, :] * S[1:, :]) < 0
        mV = (S[:, :-1] * S[:, 1:]) < 0
        with np.errstate(invalid="ignore", divide="ignore"):
            tH = np.where(mH, F[:-1, :] / (F[:-1, :] - F[1:, :]), np.nan)
            tV = np.where(mV, F[:, :-1] / (F[:, :-1] - F[:, 1:]), np.nan)
        ncx = ncy = n - 1

    det_scalar = ex.compile_scalar(det_frame(s))

    def cell_edges(i, j):
        """Crossing ids on the cell boundary in order bottom, right, top, left."""
        ip = (i + 1) % n if torus else i + 1
        jp = (j + 1) % n if torus else j + 1
        return [
            ("H", i, j) if mH[i, j] else None,
            ("V", ip, j) if mV[ip, j] else None,
            ("H", i, jp) if mH[i, jp] else None,
            ("V", i, j) if mV[i, j] else None,
        ]

    # cells that contain any crossing
    if torus:
        any_cross = mH | np.roll(mH, -1, axis=1) | mV | np.roll(mV, -1, axis=0)
    else:
        any_cross = mH[:, :-1] | mH[:, 1:] | mV[:-1, :] | mV[1:, :]
    active = np.argwhere(any_cross[:ncx, :ncy])

    def subsample_resolves(i, j):
        """4x subgrid of a saddle cell: every subcell must have at most
        two sign-change edges."""
        sx = xs[i] + np.linspace(0.0, hx, 5)
        sy = ys[j] + np.linspace(0.0, hy, 5)
        sxg, syg = np.meshgrid(sx, sy, indexing="ij")
        sf = ex.compile_grid(det_frame(s))(sxg, syg)
        ss = np.where(sf < 0.0, -1, 1)
        for a in range(4):
            for b in range(4):
                edges = int((ss[a, b] * ss[a + 1, b]) < 0) \
                    + int((ss[a + 1, b] * ss[a + 1, b + 1]) < 0) \
                    + int((ss[a, b + 1] * ss[a + 1, b + 1]) < 0) \
                    + int((ss[a, b] * ss[a, b + 1]) < 0)
                if edges == 4:
                    return False
        return True

    segments = []
    for i, j in active:
        edges = cell_edges(i, j)
        present = [e for e in edges if e is not None]
        if len(present) == 0:
            continue
        if len(present) == 2:
            segments.append((present[0], present[1]))
        elif len(present) == 4:
            if not subsample_resolves(i, j):
                raise SaddleAmbiguity(
                    "cell (%d, %d) has four crossings unresolved at 4x subsampling"
                    % (i, j))
            fc = det_scalar(xs[i] + hx / 2, ys[j] + hy / 2)
            if fc == 0.0:
                raise SaddleAmbiguity(
                    "cell (%d, %d): determinant vanishes at the cell center" % (i, j))
            bottom, right, top, left = edges
            if (1 if fc > 0 else -1) == S[i, j]:
                segments.append((bottom, right))
                segments.append((top, left))
            else:
                segments.append((bottom, left))
                segments.append((top, right))
        else:
            raise SaddleAmbiguity(
                "cell (%d, %d) has %d crossing edges" % (i, j, len(present)))

    if not segments:
        return []

    def coord(cid):
        kind, i, j = cid
        if kind == "H":
            return (xs[i] + tH[i, j] * hx, ys[j])
        return (xs[i], ys[j] + tV[i, j] * hy)

    adj = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for c, nb in adj.items():
        if len(nb) > 2:
            raise SaddleAmbiguity("crossing %r shared by %d segments" % (c, len(nb)))

    # walk components: open arcs first (degree-1 endpoints), then loops
    visited = set()
    raw_curves = []
    open_ends = [c for c, nb in adj.items() if len(nb) == 1]
    starts = open_ends + [c for c in adj if c not in set(open_ends)]
    for start in starts:
        if start in visited:
            continue
        path = [start]
        visited.add(start)
        prev = None
        cur = start
        closed = False
        while True:
            nxt = None
            for cand in adj[cur]:
                if cand != prev:
                    nxt = cand
                    break
            if nxt is None:
                break
            if nxt == start:
                closed = True
                break
            if nxt in visited:
                break
            path.append(nxt)
            visited.add(nxt)
            prev, cur = cur, nxt
        raw_curves.append((path, closed))

    curves = []
    for path, closed in raw_curves:
        wrapped = [ch.wrap(*coord(c)) for c in path]
        pts = [wrapped[0]]
        for k in range(1, len(wrapped)):
            dx, dy = ch.delta(pts[-1], wrapped[k])
            q = (pts[-1][0] + dx, pts[-1][1] + dy)
            if math.hypot(q[0] - pts[-1][0], q[1] - pts[-1][1]) < 1e-9 * min(hx, hy):
                continue
            pts.append(q)
        if len(pts) < (3 if closed else 2):
            continue
        if closed:
            dx, dy = ch.delta(ch.wrap(*pts[-1]), ch.wrap(*pts[0]))
            end = (pts[-1][0] + dx, pts[-1][1] + dy)
            wrap = (int(round((end[0] - pts[0][0]) / ch.periods[0])),
                    int(round((end[1] - pts[0][1]) / ch.periods[1]))) if torus else (0, 0)
        else:
            wrap = (0, 0)
        curves.append((pts, closed, wrap))

    curves = _refine(s, curves, tol)
    curves = [_orient(s, pts, closed, wrap) for pts, closed, wrap in curves]

    # deterministic component order and canonical starting vertex
    def curve_key(c):
        pts, closed, wrap = c
        wpts = [ch.wrap(*p) for p in pts]
        return min((round(p[0], 9), round(p[1], 9)) for p in wpts)

    out = []
    for cid, (pts, closed, wrap) in enumerate(sorted(curves, key=curve_key)):
        if closed:
            wpts = [ch.wrap(*p) for p in pts]
            k = min(range(len(pts)),
                    key=lambda i: (round(wpts[i][0], 9), round(wpts[i][1], 9)))
            rotated = [ch.wrap(*pts[k])]
            order = list(range(k, len(pts))) + list(range(0, k))
            for idx in order[1:]:
                dx, dy = ch.delta(ch.wrap(*rotated[-1]), ch.wrap(*pts[idx]))
                rotated.append((rotated[-1][0] + dx, rotated[-1][1] + dy))
            pts = rotated
        out.append(SingularCurve(cid, tuple((float(p[0]), float(p[1])) for p in pts),
                                 closed, wrap))
    return out


def _refine(s, curves, tol):
    """Newton-project all vertices onto Z, vectorized across components."""
    if not curves:
        return curves
    target = tol.refine_rel * grid_frame_scale(s)
    f = ex.compile_grid(det_frame(s))
    dxe, dye = det_gradient(s)
    fx = ex.compile_grid(dxe)
    fy = ex.compile_grid(dye)
    lens = [len(pts) for pts, _, _ in curves]
    px = np.concatenate([[p[0] for p in pts] for pts, _, _ in curves])
    py = np.concatenate([[p[1] for p in pts] for pts, _, _ in curves])
    for _ in range(tol.newton_cap):
        F = f(px, py)
        act = np.abs(F) > target
        if not act.any():
            break
        gx = fx(px, py)
        gy = fy(px, py)
        g2 = gx * gx + gy * gy
        if float(np.min(g2[act])) <= 1e-300:
            k = int(np.argmin(np.where(act, g2, np.inf)))
            raise NotRegular("determinant gradient vanishes near (%g, %g)"
                             % (px[k], py[k]))
        step = np.where(act, F / g2, 0.0)
        px = px - step * gx
        py = py - step * gy
    F = f(px, py)
    if float(np.max(np.abs(F))) > target:
        k = int(np.argmax(np.abs(F)))
        raise NotRegular("Newton refinement stalled at (%g, %g), |det| = %g"
                         % (px[k], py[k], abs(F[k])))
    out = []
    ofs = 0
    for (pts, closed, wrap), m in zip(curves, lens):
        out.append(([(px[ofs + i], py[ofs + i]) for i in range(m)], closed, wrap))
        ofs += m
    return out


def _orient(s, pts, closed, wrap):
    """Reverse the traversal if M+ is not on the left of the walking
    direction; the test is the cross product of the step with the
    determinant gradient, aggregated over the whole component."""
    p = np.asarray(pts, float)
    if closed:
        d = np.roll(p, -1, axis=0) - p
        dx_close, dy_close = s.chart.delta(s.chart.wrap(*pts[-1]), s.chart.wrap(*pts[0]))
        d[-1] = (dx_close, dy_close)
    else:
        d = np.diff(p, axis=0)
    mid = p[:len(d)] + d / 2
    gxe, gye = det_gradient(s)
    gx = ex.compile_grid(gxe)(mid[:, 0], mid[:, 1])
    gy = ex.compile_grid(gye)(mid[:, 0], mid[:, 1])
    total = s.orientation * float(np.sum(d[:, 0] * gy - d[:, 1] * gx))
    if total < 0:
        pts = pts[::-1]
        wrap = (-wrap[0], -wrap[1])
    return pts, closed, wrap


# ---------------------------------------------------------------------------
# Angle defect between Delta and the tangent of Z


def _line_angle(vx, vy):
    """Angle of a line (not vector) in [0, pi)."""
    return np.mod(np.arctan2(vy, vx), math.pi)


def _wrap_half(a):
    """Reduce mod pi into [-pi/2, pi/2)."""
    return np.mod(a + math.pi / 2, math.pi) - math.pi / 2


def _delta_direction(s, px, py):
    """Direction of the line Delta at points of Z: the larger frame field
    (on Z the two are parallel, so either nonzero one represents Delta)."""
    x1, x2 = s.X.on_grid(px, py)
    y1, y2 = s.Y.on_grid(px, py)
    use_x = (x1 * x1 + x2 * x2) >= (y1 * y1 + y2 * y2)
    return np.where(use_x, x1, y1), np.where(use_x, x2, y2)


def _steps(s, w):
    """Per-vertex forward steps; for closed curves the last step returns
    to the first vertex through the minimal image."""
    p = w.as_array()
    if w.closed:
        d = np.roll(p, -1, axis=0) - p
        d[-1] = s.chart.delta(s.chart.wrap(*w.points[-1]), s.chart.wrap(*w.points[0]))
    else:
        d = np.diff(p, axis=0)
    return p, d


def _gradient_tangent(s, px, py):
    """Walking-direction tangent of Z from the determinant gradient:
    rotate grad det by -90 degrees and apply the bundle orientation, so
    that M+ stays on the left."""
    gxe, gye = det_gradient(s)
    gx = ex.compile_grid(gxe)(px, py)
    gy = ex.compile_grid(gye)(px, py)
    return s.orientation * gy, -s.orientation * gx


def find_tangencies(s: ArsSpec, w: SingularCurve,
                    tol: Tolerances | None = None) -> SingularCurve:
    """Locate tangency points of Delta with the component w and assign
    their contributions; returns w with tangencies populated in walking
    order."""
    tol = tol or default_tolerances()
    p, steps = _steps(s, w)
    ux, uy = _delta_direction(s, p[:, 0], p[:, 1])
    tx, ty = _gradient_tangent(s, p[:, 0], p[:, 1])
    defect = _wrap_half(_line_angle(ux, uy) - _line_angle(tx, ty))
    n = len(p)
    arcs = w.arclengths()
    seg_len = np.hypot(steps[:, 0], steps[:, 1])

    exact = np.abs(defect) <= 1e-12
    hits = []  # (arc_position, vertex_or_segment, tau)

    if w.closed:
        pairs = [(i, (i + 1) % n) for i in range(n)]
    else:
        pairs = [(i, i + 1) for i in range(n - 1)]

    for i in np.nonzero(exact)[0].tolist():
        if not w.closed and (i == 0 or i == n - 1):
            continue  # open-arc endpoints carry no reliable two-sided slope
        prev = (i - 1) % n
        nxt = (i + 1) % n
        if exact[prev] or exact[nxt]:
            raise TangencyNotTransversal(
                "flat angle defect near (%g, %g)" % (p[i, 0], p[i, 1]))
        slope = defect[nxt] - defect[prev]
        if abs(slope) < 1e-10:
            raise TangencyNotTransversal(
                "defect touches zero without sign change at (%g, %g)"
                % (p[i, 0], p[i, 1]))
        loc = s.chart.wrap(float(p[i, 0]), float(p[i, 1]))
        hits.append((float(arcs[i]), loc, 1 if slope > 0 else -1))

    for i, jn in pairs:
        if exact[i] or exact[jn]:
            continue
        a, b = defect[i], defect[jn]
        if a * b >= 0 or abs(b - a) >= math.pi / 2:
            continue
        t, loc = _bisect_tangency(s, tuple(p[i]), tuple(p[i] + steps[i]), tol)
        arcpos = float(arcs[i] + t * seg_len[i])
        hits.append((arcpos, s.chart.wrap(float(loc[0]), float(loc[1])),
                     1 if b > a else -1))

    hits.sort(key=lambda h: h[0])
    tangencies = tuple(TangencyPoint(loc, tau, arc) for arc, loc, tau in hits)
    return replace(w, tangencies=tangencies)


def _bisect_tangency(s, pa, pb, tol):
    """Bisect the angle defect root on the chord pa->pb; each probe is
    first Newton-projected back onto Z.  Returns (t, point)."""
    f = ex.compile_scalar(det_frame(s))
    dxe, dye = det_gradient(s)
    fx = ex.compile_scalar(dxe)
    fy = ex.compile_scalar(dye)
    target = tol.refine_rel * grid_frame_scale(s)

    def project(x, y):
        for _ in range(tol.newton_cap):
            v = f(x, y)
            if abs(v) <= target:
                break
            gx = fx(x, y)
            gy = fy(x, y)
            g2 = gx * gx + gy * gy
            if g2 <= 1e-300:
                raise NotRegular("gradient vanished while projecting (%g, %g)" % (x, y))
            x -= v * gx / g2
            y -= v * gy / g2
        return x, y

    def defect_at(t):
        x = pa[0] + t * (pb[0] - pa[0])
        y = pa[1] + t * (pb[1] - pa[1])
        x, y = project(x, y)
        ux, uy = _delta_direction(s, np.asarray(x), np.asarray(y))
        txv, tyv = _gradient_tangent(s, np.asarray(x), np.asarray(y))
        d = _wrap_half(float(_line_angle(ux, uy)) - float(_line_angle(txv, tyv)))
        return float(d), (x, y)

    span = s.chart.spans
    arc_tol = tol.arc_rel * min(span)
    seg = math.hypot(pb[0] - pa[0], pb[1] - pa[1])
    lo, hi = 0.0, 1.0
    wlo, plo = defect_at(lo)
    whi, phi_pt = defect_at(hi)
    if wlo == 0.0:
        return lo, plo
    if whi == 0.0:
        return hi, phi_pt
    point = plo
    while (hi - lo) * seg > arc_tol:
        mid = (lo + hi) / 2
        wm, point = defect_at(mid)
        if wm == 0.0:
            return mid, point
        if (wm > 0) == (wlo > 0):
            lo, wlo = mid, wm
        else:
            hi, whi = mid, wm
    return (lo + hi) / 2, point


def revolutions(s: ArsSpec, w: SingularCurve,
                tol: Tolerances | None = None) -> int:
    """Number of revolutions of Delta along the closed component w: the
    degree of the projectivized line field relative to the curve tangent,
    from a continuous angle lift over one traversal.

    Independent of find_tangencies: the tangent here comes from central
    differences of the polyline, not from the determinant gradient.
    """
    tol = tol or default_tolerances()
    if not w.closed:
        raise CurveNotClosed("revolutions needs a closed component")
    p, d = _steps(s, w)
    central = d + np.roll(d, 1, axis=0)
    ux, uy = _delta_direction(s, p[:, 0], p[:, 1])
    theta = _line_angle(ux, uy) - _line_angle(central[:, 0], central[:, 1])
    inc = _wrap_half(np.diff(np.concatenate([theta, theta[:1]])))
    worst = float(np.max(np.abs(inc)))
    if worst > tol.lift_step:
        raise LiftUnstable("angle lift jumps by %.3f > %.3f; increase resolution"
                           % (worst, tol.lift_step))
    total = float(np.sum(inc))
    deg = total / math.pi
    nearest = round(deg)
    if abs(deg - nearest) > tol.degree_residual:
        raise LiftUnstable("lift residual %.3f exceeds %.2f"
                           % (abs(deg - nearest), tol.degree_residual))
    return int(nearest)
