"""
Labelled graphs and Lipschitz equivalence
=========================================

On a torus the locus cuts the surface into signed regions; the labelled
bipartite graph (one vertex per region with its sign and Euler
characteristic, one edge per locus component with its tangency cycle)
determines the structure up to Lipschitz equivalence, possibly after a
global sign flip.
"""

from ars2d import (
    analyze,
    equivalent,
    euler_number,
    fixture,
    flip,
    graph_to_dot,
    load_graph_fixture,
    total_chi,
    verify_witness,
)

# a structure's graph comes out of the analysis pipeline
report = analyze(fixture("tangency-torus"), 256)
g = report.graph
for v in sorted(g.vertices, key=lambda v: v.id):
    print("vertex %-4s sign %+d  chi %+d" % (v.id, v.sign, v.chi))
for e in sorted(g.edges, key=lambda e: e.id):
    print("edge   %-4s %s -> %s  cycle %s" % (e.id, e.alpha, e.omega, e.cycle))
print("euler number:", euler_number(g), " total chi:", total_chi(g))

# bundled graph fixtures are ready-made comparison subjects
g1 = load_graph_fixture("fig1")
g5 = load_graph_fixture("fig5")
print("euler(fig1) = %d, euler(fig5) = %d" % (euler_number(g1), euler_number(g5)))

# fig5 is fig1 with all orientations reversed: equivalent after a flip
w = equivalent(g1, g5)
print("fig1 ~ fig5:", w is not None, " flipped:", w.flipped)
print("witness checks out:", verify_witness(g1, g5, w))
print("flip is an involution:", flip(flip(g1)) == g1)

# graphs export to DOT for rendering with external tools
print(graph_to_dot(g))
