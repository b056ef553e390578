"""
The distance measures
=====================

Every (kind, name) pair in the registry, on small hand-made values.
"""

from rsforest import Graph
from rsforest.data import make_setseq
from rsforest.distances import REGISTRY, resolve

for kind, name in sorted(REGISTRY, key=lambda k: (k[0].value, k[1])):
    print(f"{kind.value:>12} / {name}")

# time series: DTW aligns the repeated 1 for free
dtw = resolve("timeseries", "dtw")
print("dtw((0,1,2), (0,2)) =", dtw((0.0, 1.0, 2.0), (0.0, 2.0)))
print("cosine((1,1), (1,0)) =", round(resolve("timeseries", "cosine")((1.0, 1.0), (1.0, 0.0)), 5))

# sequences of sets: substitution costs the Jaccard distance of the two sets
edit = resolve("setseq", "editjaccard")
s = make_setseq([{"a", "b"}, {"c"}])
t = make_setseq([{"a"}])
print("edit([{a,b},{c}], [{a}]) =", edit(s, t))

# graphs: edge overlap, degree distributions and Laplacian spectra
path = Graph.from_edges(3, [(0, 1), (1, 2)])
triangle = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
for name in ("graphjaccard", "degreedivergence", "ipsenmikhailov"):
    print(f"{name}(path, triangle) = {resolve('graph', name)(path, triangle):.6f}")
