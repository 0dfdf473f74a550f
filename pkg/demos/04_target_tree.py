"""Reshaping a tree into a target with other segment lengths.

A target keeps the turning points and their relative positions but lets
each segment take a new length.  The algorithm first checks on a virtual
overlay that the target really keeps every relative position, then grows
and shrinks compressible runs in parallel.
"""
from gridshrink.algorithms import materialize_target, target_tree, topological_equivalence_test
from gridshrink.errors import NotTopologicallyEquivalent
from gridshrink.grid import Shape, ascii_art, extract_segments, same_up_to_translation
from gridshrink.instances import gen_target_pair

pair = gen_target_pair(50, 6, seed=4)
print("initial:")
print(ascii_art(pair.initial))
print("\ntarget lengths:", pair.target_lengths)
print("target:")
print(ascii_art(pair.final))

run = target_tree(pair.initial, pair.target_lengths)
assert same_up_to_translation(run.final, pair.final)
print(f"\nreached in {run.main_rounds} rounds, {run.stats['growth_iterations']} growth and "
      f"{run.stats['shrink_iterations']} shrink iterations (bound {run.stats['iteration_bound']})")

# A target that would move one branch past another is refused.
pts = [(x, 0) for x in range(7)] + [(1, 1), (1, 2), (1, 3), (2, 3), (3, 3), (5, 1), (5, 2)]
idx = {p: i for i, p in enumerate(pts)}
edges = [(idx[(x, 0)], idx[(x + 1, 0)]) for x in range(6)]
for chain in ([(1, 0), (1, 1), (1, 2), (1, 3), (2, 3), (3, 3)], [(5, 0), (5, 1), (5, 2)]):
    edges += [(idx[a], idx[b]) for a, b in zip(chain, chain[1:])]
comb = Shape.from_points(pts, edges, anchor=0)
lengths = [2 if {comb.pos[s.nodes[0]], comb.pos[s.nodes[-1]]} == {(1, 0), (5, 0)} else s.length
           for s in extract_segments(comb)]
print("\ncomb:")
print(ascii_art(comb))
print("target with the spine between the branches cut to 2 nodes:")
print(ascii_art(materialize_target(comb, lengths)))
print("equivalent:", topological_equivalence_test(comb, lengths))
try:
    target_tree(comb, lengths)
except NotTopologicallyEquivalent as exc:
    print("refused:", exc)
