"""Removing every column and row that holds no turning point.

The result keeps the tree's shape but squeezes out all slack.  Nodes first
learn which lines are incompressible (one spatial PASC per turning point),
then compressible runs halve into their western (southern) neighbour.
"""
from gridshrink.algorithms import compute_incompressible_nodes, incompressible_tree, oracle_flags
from gridshrink.grid import ascii_art, incompressible_form_oracle, same_up_to_translation
from gridshrink.instances import gen_random_tree

tree = gen_random_tree(60, 6, seed=4)
print(ascii_art(tree))

flags = compute_incompressible_nodes(tree)
assert flags == oracle_flags(tree)
marks = {u: "#" for u, (c, r) in flags.items() if c and r}
print("\nnodes in an incompressible column and row (#):")
print(ascii_art(tree, marks))

run = incompressible_tree(tree)
print(f"\nincompressible form: {run.final.n} nodes, {run.main_rounds} rounds")
print(ascii_art(run.final))
assert same_up_to_translation(run.final, incompressible_form_oracle(tree))

known = incompressible_tree(tree, known_flags=flags)
print(f"\nwith the flags given up front: {known.main_rounds} rounds")
