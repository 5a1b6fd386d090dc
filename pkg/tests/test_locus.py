"""Singular locus tracing, tangency points, revolutions."""

import math

import numpy as np
import pytest

from ars2d.errors import CurveNotClosed, SaddleAmbiguity, SpecError
from ars2d.locus import find_tangencies, revolutions, trace_locus
from ars2d.model import (
    ArsSpec,
    SurfaceChart,
    VectorField,
    default_tolerances,
    det_frame,
    fixture,
    grid_frame_scale,
)
from ars2d import expr as ex


def enriched(s, resolution):
    out = []
    for c in trace_locus(s, resolution):
        c = find_tangencies(s, c)
        out.append(c)
    return out


class TestTraceGrushinTorus:
    def test_two_circles(self):
        s = fixture("grushin-torus")
        curves = trace_locus(s, 128)
        assert len(curves) == 2
        for c in curves:
            assert c.closed
            # vertical circles wind once around the y period
            assert abs(c.wrap[1]) == 1 and c.wrap[0] == 0
        xs = sorted(float(np.mean([p[0] for p in c.points])) for c in curves)
        assert xs[0] == pytest.approx(0.0, abs=1e-6)
        assert xs[1] == pytest.approx(0.5, abs=1e-6)

    def test_orientation_puts_positive_side_left(self):
        s = fixture("grushin-torus")
        c0, c1 = trace_locus(s, 128)
        # det = sin(2 pi x): positive for 0 < x < 1/2.  The circle at
        # x = 0 has that region on its right in +y direction, so it must
        # walk in -y; the circle at x = 1/2 walks in +y.
        assert c0.wrap[1] == -1
        assert c1.wrap[1] == 1

    def test_no_tangencies_and_zero_revolutions(self):
        s = fixture("grushin-torus")
        for c in enriched(s, 128):
            assert c.tangencies == ()
            assert revolutions(s, c) == 0

    def test_riemannian_empty(self):
        assert trace_locus(fixture("riemannian-torus"), 64) == []

    def test_resolution_precondition(self):
        with pytest.raises(SpecError):
            trace_locus(fixture("grushin-torus"), 32)


class TestTraceTangencyTorus:
    # det = sin(2 pi y) - 0.5 cos(2 pi x) vanishes on two closed curves
    # winding horizontally; the locus tangent is horizontal exactly at
    # x = 0 and x = 1/2, giving four tangency points.
    ORACLE = {
        (0.0, 1 / 12): 1,
        (0.5, 11 / 12): -1,
        (0.0, 5 / 12): 1,
        (0.5, 7 / 12): -1,
    }

    def test_components_and_tangency_locations(self):
        s = fixture("tangency-torus")
        curves = enriched(s, 256)
        assert len(curves) == 2
        found = {}
        for c in curves:
            assert c.closed
            assert abs(c.wrap[0]) == 1 and c.wrap[1] == 0
            assert len(c.tangencies) == 2
            assert sorted(t.contribution for t in c.tangencies) == [-1, 1]
            for t in c.tangencies:
                found[t.location] = t.contribution
        assert len(found) == 4
        for (ox, oy), tau in self.ORACLE.items():
            best = min(found, key=lambda q: (q[0] - ox) % 1 + abs(q[1] - oy))
            dx = min((best[0] - ox) % 1, (ox - best[0]) % 1)
            assert dx < 1e-6 and abs(best[1] - oy) < 1e-6
            assert found[best] == tau

    def test_eq1_identity_each_component(self):
        s = fixture("tangency-torus")
        for c in enriched(s, 128):
            assert revolutions(s, c) == sum(t.contribution for t in c.tangencies)

    def test_orientation_reversal_negates_contributions(self):
        s = fixture("tangency-torus")
        flipped = ArsSpec(s.chart, s.X, s.Y, -s.orientation)
        base = enriched(s, 128)
        rev = enriched(flipped, 128)
        assert len(base) == len(rev)
        for cb, cr in zip(base, rev):
            assert cr.wrap == (-cb.wrap[0], -cb.wrap[1])
            taus_b = sorted(t.contribution for t in cb.tangencies)
            taus_r = sorted(-t.contribution for t in cr.tangencies)
            assert taus_b == taus_r
            assert revolutions(flipped, cr) == -revolutions(s, cb)
            locs_b = sorted(t.location for t in cb.tangencies)
            locs_r = sorted(t.location for t in cr.tangencies)
            assert all(abs(a[0] - b[0]) % 1 < 1e-6 and abs(a[1] - b[1]) < 1e-6
                       for a, b in zip(locs_b, locs_r))


class TestRefinementAndDeterminism:
    def test_vertices_lie_on_locus(self):
        tol = default_tolerances()
        for name in ("grushin-torus", "tangency-torus"):
            s = fixture(name)
            d = ex.compile_grid(det_frame(s))
            bound = tol.refine_rel * grid_frame_scale(s)
            for c in trace_locus(s, 128):
                a = c.as_array()
                worst = float(np.max(np.abs(d(a[:, 0], a[:, 1]))))
                assert worst <= bound

    def test_trace_is_deterministic(self):
        s = fixture("tangency-torus")
        a = trace_locus(s, 128)
        b = trace_locus(s, 128)
        assert a == b

    def test_doubling_preserves_integer_outputs(self):
        for name in ("grushin-torus", "tangency-torus", "F3",
                     "grushin-plane", "riemannian-torus"):
            s = fixture(name)
            per_res = []
            for res in (64, 128):
                cs = enriched(s, res)
                summary = []
                for c in cs:
                    revs = revolutions(s, c) if c.closed else None
                    summary.append((c.closed, c.wrap,
                                    tuple(t.contribution for t in c.tangencies),
                                    revs))
                per_res.append(summary)
            assert per_res[0] == per_res[1], name


class TestPlaneCharts:
    def test_grushin_plane_vertical_segment(self):
        s = fixture("grushin-plane")
        curves = enriched(s, 128)
        assert len(curves) == 1
        c = curves[0]
        assert not c.closed
        assert c.tangencies == ()
        a = c.as_array()
        assert np.max(np.abs(a[:, 0])) < 1e-9
        assert abs(a[0, 1]) == pytest.approx(1.0)
        assert abs(a[-1, 1]) == pytest.approx(1.0)

    def test_f3_arc_and_origin_tangency(self):
        s = fixture("F3")
        curves = enriched(s, 128)
        assert len(curves) == 1
        c = curves[0]
        assert not c.closed
        assert len(c.tangencies) == 1
        t = c.tangencies[0]
        assert abs(t.location[0]) < 1e-8 and abs(t.location[1]) < 1e-8
        assert t.contribution == -1

    def test_open_arc_rejects_revolutions(self):
        s = fixture("F3")
        c = trace_locus(s, 128)[0]
        with pytest.raises(CurveNotClosed):
            revolutions(s, c)


class TestSaddleCells:
    def test_resolved_saddle_separates_branches(self):
        # xy = 1e-4 puts both hyperbola branches inside the central cell
        # at this resolution; subsampling must route them apart
        s = ArsSpec(SurfaceChart.plane(-1, 1, -1, 1),
                    VectorField.parse("1", "0"),
                    VectorField.parse("0", "x*y - 0.0001"))
        curves = trace_locus(s, 64)
        assert len(curves) == 2
        for c in curves:
            a = c.as_array()
            q = np.sign(a[:, 0] * a[:, 1])
            # each branch stays in a single quadrant pair
            assert np.all(q >= 0) or np.all(q <= 0)

    def test_crossing_branches_raise(self):
        # xy = 0 is two lines through one point; no refinement can split
        # the four crossing edges into two disjoint arcs
        s = ArsSpec(SurfaceChart.plane(-1, 1, -1, 1),
                    VectorField.parse("1", "0"),
                    VectorField.parse("0", "x*y"))
        with pytest.raises(SaddleAmbiguity):
            trace_locus(s, 64)
