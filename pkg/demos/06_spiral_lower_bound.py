"""Two interlocked spirals that must be unwound one segment at a time.

The outer spiral's red half has to shrink each segment to a given length.
Shrinking a segment before the ones outside it are done pushes the rest of
the spiral into the black half, so any shrink-only schedule is sequential
and pays a logarithmic number of rounds per segment.
"""
import math

from gridshrink.errors import CollisionError
from gridshrink.instances import (
    gen_log_spiral_pair,
    gen_spiral_pair,
    measure_sequential_rounds,
    shrink_red_segment,
    check_premature_shrink,
)

pair = gen_spiral_pair(8)
s = pair.t_initial
grid = {p: u for u, p in s.pos.items()}
black_end = pair.labels["b9"]
xs = [p[0] for p in s.pos.values()]
ys = [p[1] for p in s.pos.values()]
for y in range(max(ys), min(ys) - 1, -1):
    print("".join(("b" if grid[(x, y)] <= black_end else "r") if (x, y) in grid else "."
                  for x in range(min(xs), max(xs) + 1)))
print(f"\nk=8: n={pair.n}, red lengths {pair.red}, target lengths {pair.green}")

try:
    shrink_red_segment(s, pair, 4, max_sweeps=1)
except CollisionError as exc:
    print(f"shrinking red segment 4 first: {len(exc.reports)} collisions, e.g. {exc.reports[0]}")
print("verdict:", check_premature_shrink(pair, 4))

print("\n k   n      rounds  rounds/(k log k)")
for k in (8, 12, 16, 20):
    p = gen_spiral_pair(k)
    r = measure_sequential_rounds(p)
    print(f"{k:2d} {p.n:6d} {r:7d}  {r / (k * math.log2(k)):.3f}")

print("\npadded spirals (k grows like log n):")
for k in (6, 8, 10):
    p = gen_log_spiral_pair(k)
    r = measure_sequential_rounds(p)
    print(f"k={k:2d} n={p.n:6d} rounds={r:3d}  rounds/(log n)^2={r / math.log2(p.n) ** 2:.3f}")
