"""Collapsing an arbitrary connected shape when all adjacent nodes are linked.

Columns and rows halve alternately, so the round count depends on the
bounding box rather than on the number of nodes.
"""
import math

from gridshrink.algorithms import shape_reduction_adjacency
from gridshrink.grid import ascii_art
from gridshrink.instances import gen_random_blob

blob = gen_random_blob(30, seed=5)
print(ascii_art(blob))
run = shape_reduction_adjacency(blob)
print("\n(columns, rows) after each sweep:", run.stats["counts"])
print("main rounds:", run.main_rounds)

print("\n    n   C   R  rounds  ceil(log C)+ceil(log R)")
for n in (50, 200, 800, 2000):
    b = gen_random_blob(n, seed=n)
    r = shape_reduction_adjacency(b, keep_traces=False)
    C, R = r.stats["columns"], r.stats["rows"]
    print(f"{n:5d} {C:3d} {R:3d} {r.main_rounds:7d}  {math.ceil(math.log2(C)) + math.ceil(math.log2(R))}")
