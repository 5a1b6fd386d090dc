"""
Carnot-Caratheodory distances
=============================

Admissible curves pay the squared minimal control norm; crossing the
singular locus is possible but transversal motion gets expensive near
it.  Distances come from an anisotropic shortest-path solve on a lattice
and are cross-checked by Hamiltonian geodesic shooting.  Near the locus
the Ball-Box exponent of d(p, p + h v) reveals the local geometry.
"""

import math

from ars2d import (
    ballbox_exponent,
    cc_distance_grid,
    curve_length,
    fixture,
    geodesic_shoot,
)

s = fixture("grushin-plane")

# along the locus-normal axis the motion is Euclidean; across the locus
# it costs sqrt(pi) to climb half a unit starting on Z itself
d1 = cc_distance_grid(s, (0.0, 0.0), (0.5, 0.0), 512)
d2 = cc_distance_grid(s, (0.0, 0.0), (0.0, 0.5), 512)
print("d((0,0),(0.5,0)) = %.6f   (exact 0.5)" % d1)
print("d((0,0),(0,0.5)) = %.6f   (exact sqrt(pi) = %.6f)" % (d2, math.sqrt(math.pi)))

# the same sqrt(pi) from the shooting oracle: the geodesic leaving the
# locus with covector (1, eta) returns to it at time pi/eta
eta = math.sqrt(math.pi)
c = geodesic_shoot(s, (0.0, 0.0), (1.0, eta), math.pi / eta, 4000)
print("shot endpoint (%.2e, %.8f), length %.8f" % (c.endpoint[0], c.endpoint[1], curve_length(s, c)))

# Ball-Box exponents: 1 along the locus, 1/2 across a Grushin point,
# 1/3 across a tangency point
print("Grushin along-axis   exponent %.3f" % ballbox_exponent(s, (0.0, 0.0), (1.0, 0.0), 0.01, 0.16))
print("Grushin transverse   exponent %.3f" % ballbox_exponent(s, (0.0, 0.0), (0.0, 1.0), 0.01, 0.16))
print("tangency transverse  exponent %.3f" % ballbox_exponent(fixture("F3"), (0.0, 0.0), (0.0, 1.0), 0.01, 0.16))
