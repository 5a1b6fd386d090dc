"""
Point classes and the genericity check
======================================

Points of a structure are ordinary (the frame spans), Grushin points
(first bracket needed), or tangency points (second brackets needed).
The three local normal forms F1, F2, F3 ship as fixtures; each has its
defining behaviour at the origin.
"""

from ars2d import (
    check_H0,
    classify_point,
    det_frame,
    fixture,
    metric_cost,
    to_string,
    trace_locus,
)

# one fixture per local normal form
for name in ("F1", "F2", "F3"):
    s = fixture(name)
    cls = classify_point(s, (0.0, 0.0))
    print("%s: det = %-8s origin is %s" % (name, to_string(det_frame(s)), cls.value))

# the metric cost g_p(v) blows up transversally to the locus
s = fixture("F2")
for x in (0.5, 0.1, 0.01, 0.0):
    cost = metric_cost(s, (x, 0.0), (0.0, 1.0))
    print("g_(%.2f,0)(e2) = %s" % (x, cost))

# the genericity check: regular locus, isolated tangencies, full flag
s = fixture("tangency-torus")
curves = trace_locus(s, 128)
report = check_H0(s, curves, 128)
print("tangency-torus genericity:", "ok" if report.ok else report.failures)
