"""Shrinking a tree into a single node, leaves first.

Segments that touch a leaf halve themselves into their turning point; when a
turning point has lost all its leaf segments it becomes a leaf itself.  The
last straight segment runs a coin-toss election between its two ends.
"""
from gridshrink.algorithms import bfs_shrinking
from gridshrink.grid import ascii_art
from gridshrink.instances import gen_random_tree

tree = gen_random_tree(40, 6, seed=3)
print(ascii_art(tree))

run = bfs_shrinking(tree, seed=3, snapshots=True)
print(f"\n{tree.n} nodes -> {run.final.n} node")
print(f"preprocessing {run.preprocessing_rounds} rounds (charged), main {run.main_rounds} rounds, "
      f"{run.op_rounds} of them with operations")
print("phases:", run.stats["phases"], "sweeps:", run.stats["sweeps"],
      "election iterations:", run.stats["election_iterations"])
print("peak state per node:", run.peak_state_bits, "bits")

# Walk the trace: shape size after each operation round.
sizes = [len(t.snapshot["pos"]) for t in run.traces if t.ops]
print("node count after each operation round:", sizes)

# Larger trees: rounds grow with k log n rather than n.
for n in (64, 256, 1024, 4096):
    t = gen_random_tree(n, 16, seed=1)
    r = bfs_shrinking(t, seed=1, keep_traces=False)
    print(f"n={n:5d}  main rounds={r.main_rounds}")
