"""
Tracing the singular locus
==========================

The locus Z = {det(X, Y) = 0} is extracted by marching squares and
refined by Newton steps along grid edges.  On a torus every component is
closed; each closed component satisfies an exact integer identity: the
number of revolutions the distribution makes along the curve equals the
sum of its tangency contributions.
"""

from ars2d import find_tangencies, fixture, revolutions, trace_locus

s = fixture("tangency-torus")
curves = trace_locus(s, 256)
print("components:", len(curves))

for c in curves:
    c = find_tangencies(s, c)
    rev = revolutions(s, c)
    taus = [t.contribution for t in c.tangencies]
    print("  component %d: wrap %s, %d vertices" % (c.component, c.wrap, len(c.points)))
    for t in c.tangencies:
        print("    tangency at (%.4f, %.4f), contribution %+d" % (t.location[0], t.location[1], t.contribution))
    print("    revolutions %d == sum of contributions %d" % (rev, sum(taus)))

# a plane-chart structure can have open arcs ending on the boundary
s = fixture("grushin-plane")
arcs = trace_locus(s, 256)
a = arcs[0]
print("grushin-plane: %d arc, closed=%s, ends y=%.2f..%.2f" % (len(arcs), a.closed, a.points[0][1], a.points[-1][1]))
