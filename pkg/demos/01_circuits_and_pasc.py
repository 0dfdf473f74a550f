"""Circuits, beeps and counting along a chain of anonymous nodes.

Nodes cannot see ids or coordinates.  What they can do is group their pins
into partition sets, which joins neighbouring sets into circuits, and beep.
PASC uses two crossing lanes per chain to hand every node its signed offset
from a reference node, one bit per iteration.
"""
import numpy as np

from gridshrink.circuits import resolve_circuits, deliver_beeps, single_set_config
from gridshrink.grid import Shape
from gridshrink.primitives import (
    StoredValue,
    pasc_length,
    pasc_mark_first,
    pasc_run,
    segment_arith,
    spatial_pasc,
)

path = Shape.path([(x, 0) for x in range(9)], anchor=0)

# Every node merges all its pins: the whole chain is one circuit.
layout = resolve_circuits(path, {u: single_set_config(path, u) for u in path.pos})
frame = deliver_beeps(layout, {(4, 0)})
print("one shared circuit:", layout.num_circuits, "circuit(s);",
      sum(frame.got((u, 0)) for u in path.pos), "of", path.n, "nodes hear the beep")

# PASC with the middle node as reference.
res = pasc_run(9, 4, backend="circuit")
print("\nPASC bit streams (row i = bit i of each node's offset):")
print(res.bits)
print("reconstructed offsets:", res.values().tolist(), f"after {res.rounds} rounds")

# The chain can measure itself and store the answer, two bits per node.
val, rounds = pasc_length(9)
print(f"\nlength stored in the chain: {val.value} ({rounds} rounds), node bits {val.bits[:8]}")

marks, _ = pasc_mark_first(9, 5)
print("first five nodes marked:", marks.astype(int).tolist())

a, b = StoredValue.from_int(13, 4), StoredValue.from_int(11, 4)
prod, r = segment_arith("mul", a, b)
print(f"13 * 11 computed on a segment: {prod.value} in {r} rounds")

# Spatial PASC: every node learns where a reference sits, on any shape.
blob = Shape.from_cells([(x, y) for x in range(4) for y in range(3)] + [(4, 1)])
ref = blob.at[(2, 1)]
sp = spatial_pasc(blob, ref)
print("\nhorizontal offsets from the reference in a blob:")
for y in range(2, -1, -1):
    row = []
    for x in range(5):
        u = blob.at.get((x, y))
        row.append(f"{int(sp.dx[sp.ids.index(u)]):3d}" if u is not None else "  .")
    print(" ".join(row))
assert np.all(sp.dx == [blob.pos[u][0] - 2 for u in sp.ids])
