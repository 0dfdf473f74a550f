"""Instance generators: random trees and blobs, spiral lower-bound pairs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionError, IndexOutOfRange, InfeasibleParameters, KTooLarge, KTooSmall
from .grid import DIRECTIONS, EAST, GraphModel, Shape, add, is_turning_point, neg, sub
from .ops import Operation, apply_operations

SPIRAL_K_MAX = 48
LOG_SPIRAL_K_MAX = 14


# ---------------------------------------------------------------------------
# Random trees


def _tp_after(pos_of, adj, u, extra_dir=None):
    """Turning-point status of ``u`` if it gains a neighbor in ``extra_dir``."""
    dirs = [sub(pos_of[v], pos_of[u]) for v in adj[u]]
    if extra_dir is not None:
        dirs.append(extra_dir)
    if len(dirs) <= 1:
        return True
    return any(d[1] == 0 for d in dirs) and any(d[0] == 0 for d in dirs)


def _grow_tree(n, k_max, rng):
    pos = [(0, 0)]
    adj = [set()]
    at = {(0, 0): 0}
    tps = 1  # the single node counts as a turning point
    arms = int(rng.integers(1, max(1, k_max // 2) + 1))
    remaining = n - 1
    stalls = 0
    while remaining > 0:
        if stalls > 200:
            return None
        arms_left = max(1, arms)
        base_len = max(1, remaining // arms_left)
        length = remaining if arms <= 1 else int(rng.integers(max(1, base_len // 2), base_len + base_len // 2 + 2))
        length = min(length, remaining)
        u = int(rng.integers(len(pos)))
        free = [d for d in DIRECTIONS if add(pos[u], d) not in at]
        if not free:
            stalls += 1
            continue
        d = free[int(rng.integers(len(free)))]
        before = is_turning_point_raw(pos, adj, u)
        after = _tp_after(pos, adj, u, d)
        # the new leaf adds one turning point; u may gain or lose the status
        delta = 1 + int(after) - int(before)
        if len(pos) == 1:
            delta = 1  # a single node becomes a two-leaf path
        if tps + delta > k_max:
            # fall back to extending a leaf straight, which keeps the count
            leaves = [w for w in range(len(pos)) if len(adj[w]) == 1]
            if not leaves:
                stalls += 1
                continue
            u = leaves[int(rng.integers(len(leaves)))]
            v = next(iter(adj[u]))
            d = sub(pos[u], pos[v])
            if add(pos[u], d) in at:
                stalls += 1
                continue
            delta = 0
        cur = u
        grown = 0
        while grown < length:
            p = add(pos[cur], d)
            if p in at:
                break
            w = len(pos)
            pos.append(p)
            adj.append({cur})
            adj[cur].add(w)
            at[p] = w
            cur = w
            grown += 1
        if grown == 0:
            stalls += 1
            continue
        tps += delta
        remaining -= grown
        arms -= 1
        stalls = 0
    return pos, adj


def is_turning_point_raw(pos, adj, u):
    dirs = [sub(pos[v], pos[u]) for v in adj[u]]
    if len(dirs) <= 1:
        return True
    return any(d[1] == 0 for d in dirs) and any(d[0] == 0 for d in dirs)


def gen_random_tree(n: int, k_max: int, seed: int, attempts: int = 50) -> Shape:
    """Grid tree grown arm by arm with a cap on turning points."""
    if n < 1:
        raise InfeasibleParameters("n must be at least 1")
    if n == 1:
        return Shape.from_points([(0, 0)], anchor=0)
    if k_max < 2:
        raise InfeasibleParameters("a tree with two or more nodes has at least two turning points")
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        grown = _grow_tree(n, k_max, rng)
        if grown is None:
            continue
        pos, adj = grown
        edges = [(u, v) for u in range(len(pos)) for v in adj[u] if u < v]
        shape = Shape.from_points(pos, edges, anchor=0)
        k = sum(is_turning_point(shape, u) for u in shape.pos)
        if k <= k_max:
            return shape
    raise InfeasibleParameters(f"could not grow a tree with n={n}, k<={k_max}")


def gen_random_blob(n: int, seed: int) -> Shape:
    """Connected cell set grown from the origin, adjacency model."""
    if n < 1:
        raise InfeasibleParameters("n must be at least 1")
    rng = np.random.default_rng(seed)
    cells = [(0, 0)]
    occupied = {(0, 0)}
    frontier = []
    seen = set()

    def push(c):
        for d in DIRECTIONS:
            q = add(c, d)
            if q not in occupied and q not in seen:
                seen.add(q)
                frontier.append(q)

    push((0, 0))
    while len(cells) < n:
        k = int(rng.integers(len(frontier)))
        c = frontier[k]
        frontier[k] = frontier[-1]
        frontier.pop()
        cells.append(c)
        occupied.add(c)
        push(c)
    shape = Shape.from_cells(cells, anchor=0)
    shape.model = GraphModel.ADJACENCY
    return shape


# ---------------------------------------------------------------------------
# Spiral pairs


def spiral_tables(k: int, pad: int = 0):
    """Segment lengths (node counts) of the green, black and red spirals.

    ``pad`` extra nodes go to the black and red segments with odd index when
    k is even and with even index when k is odd.
    """
    green = {i: math.ceil(i / 2) + 1 for i in range(1, k)}
    black = {k: 2, k - 1: green[k - 1] + 1, k - 2: green[k - 2] + 1}
    for i in range(k - 3, 0, -1):
        black[i] = black[i + 2] + math.ceil(i / 2) + 1
    red = {k - 1: black[k - 1] - 1}
    for i in range(1, k - 1):
        red[i] = black[i] - 2
    if pad:
        parity = 1 if k % 2 == 0 else 0
        for i in black:
            if i % 2 == parity:
                black[i] += pad
        for i in red:
            if i % 2 == parity:
                red[i] += pad
    return dict(sorted(green.items())), dict(sorted(black.items())), dict(sorted(red.items()))


def check_spiral_recurrences(k, green, black, red) -> bool:
    """Re-check each defining equation of the unpadded tables."""
    ok = all(green[i] == math.ceil(i / 2) + 1 for i in range(1, k))
    ok &= black[k] == 2
    ok &= black[k - 1] == green[k - 1] + 1
    ok &= black[k - 2] == green[k - 2] + 1
    ok &= all(black[i] == black[i + 2] + math.ceil(i / 2) + 1 for i in range(1, k - 2))
    ok &= red[k - 1] == black[k - 1] - 1
    ok &= all(red[i] == black[i] - 2 for i in range(1, k - 1))
    return bool(ok)


def _rot_left(d):
    return (-d[1], d[0])


def _rot_right(d):
    return (d[1], -d[0])


def _walk_spiral(k, black, red_like):
    """Black spiral winding inward counterclockwise, then the second spiral
    walked back out from the inner end between the black turns."""
    pts = [(0, 0)]
    labels = {"b1": 0}
    seg_dirs = {}
    d = EAST
    for i in range(1, k + 1):
        if i > 1:
            d = _rot_left(d)
        for _ in range(black[i] - 1):
            pts.append(add(pts[-1], d))
        labels[f"b{i + 1}"] = len(pts) - 1
        seg_dirs[("b", i)] = d
    labels[f"r{k}"] = labels[f"b{k + 1}"]
    first = True
    for i in range(k - 1, 0, -1):
        d = _rot_left(d) if first else _rot_right(d)
        first = False
        for _ in range(red_like[i] - 1):
            pts.append(add(pts[-1], d))
        labels[f"r{i}"] = len(pts) - 1
        # direction from r_i toward r_{i+1}
        seg_dirs[("r", i)] = neg(d)
    return pts, labels, seg_dirs


@dataclass
class SpiralPair:
    k: int
    t_initial: Shape
    t_final: Shape
    green: dict
    black: dict
    red: dict
    labels: dict  # turning-point label -> node id in t_initial
    schedule: list  # red segment indices shrunk by the in-order schedule
    pad: int = 0
    final_lengths: dict = field(default_factory=dict)
    in_order_ok: bool | None = None
    in_order_sweeps: dict | None = None

    @property
    def n(self) -> int:
        return self.t_initial.n

    def sidecar(self) -> dict:
        return {
            "k": self.k,
            "pad": self.pad,
            "green": self.green,
            "black": self.black,
            "red": self.red,
            "schedule": self.schedule,
            "final_red_lengths": self.final_lengths,
        }

    def red_segment(self, shape_labels, i):
        """Node ids of red segment i, ordered from label r{i+1} back to r{i}."""
        a, b = shape_labels[f"r{i + 1}"], shape_labels[f"r{i}"]
        return list(range(a, b + 1))


def _shrinkable(k, green, red):
    # the two innermost red segments and the one next to them need growth
    # or would run into the black center, so the schedule stops before them
    return [i for i in range(1, k - 3) if red[i] > green[i]]


def _build_pair(k, pad):
    green, black, red = spiral_tables(k, pad)
    pts, labels, _ = _walk_spiral(k, black, red)
    if len(set(pts)) != len(pts):
        raise InfeasibleParameters(f"spiral embedding for k={k} intersects itself")
    t_initial = Shape.path(pts, anchor=0)
    schedule = _shrinkable(k, green, red)
    final = dict(red)
    for i in schedule:
        final[i] = green[i]
    fpts, _, _ = _walk_spiral(k, black, final)
    t_final = Shape.path(fpts, anchor=0)
    return SpiralPair(k, t_initial, t_final, green, black, red, labels, schedule, pad, final)


def gen_spiral_pair(k: int) -> SpiralPair:
    if k < 4:
        raise KTooSmall("spiral pairs need k >= 4")
    if k > SPIRAL_K_MAX:
        raise KTooLarge(f"k={k} exceeds the desk-scale cap {SPIRAL_K_MAX}")
    if k == 4:
        # the red spiral degenerates (a one-node segment), so only tables exist
        green, black, red = spiral_tables(k)
        return SpiralPair(k, None, None, green, black, red, {}, [], 0, dict(red))
    return _build_pair(k, 0)


def gen_log_spiral_pair(k: int) -> SpiralPair:
    if k < 4:
        raise KTooSmall("spiral pairs need k >= 4")
    if k > LOG_SPIRAL_K_MAX:
        raise KTooLarge(f"k={k} exceeds the desk-scale cap {LOG_SPIRAL_K_MAX}")
    pad = int(math.exp(k) // k)
    if k == 4:
        green, black, red = spiral_tables(k, pad)
        return SpiralPair(k, None, None, green, black, red, {}, [], pad, dict(red))
    return _build_pair(k, pad)


def spiral_clearance(pair: SpiralPair, i: int) -> int:
    """Gap between red segment i-1 and blue segment i+3, measured along their normal."""
    s = pair.t_initial
    lab = pair.labels
    a, b = s.pos[lab[f"r{i - 1}"]], s.pos[lab[f"r{i}"]]
    c = s.pos[lab[f"b{i + 3}"]]
    axis = 1 if a[1] == b[1] else 0
    return abs(a[axis] - c[axis])


# ---------------------------------------------------------------------------
# Sequential shrink schedules on spiral pairs


def _segment_sweep(shape, seg, target):
    """One halving sweep on ``seg`` (ordered from the anchor side).

    Both end nodes are turning points and stay; returns the new node list.
    """
    c = len(seg)
    m = min(c - target, (c - 1) // 2)
    if m <= 0:
        return shape, seg, False
    ops = [Operation.shrink(shape, seg[2 * t], seg[2 * t + 1]) for t in range(m)]
    shape = apply_operations(shape, shape.anchor, ops)
    absorbed = {seg[2 * t + 1] for t in range(m)}
    return shape, [u for u in seg if u not in absorbed], True


def sweeps_needed(length: int, target: int) -> int:
    """Sweeps taken by :func:`_segment_sweep` to bring ``length`` to ``target``."""
    sweeps = 0
    while True:
        m = min(length - target, (length - 1) // 2)
        if m <= 0:
            return sweeps
        length -= m
        sweeps += 1


def shrink_red_segment(shape, pair, i, target=None, max_sweeps=None):
    """Shrink red segment i of ``shape`` toward ``target`` nodes; returns (shape, sweeps)."""
    seg = pair.red_segment(pair.labels, i)
    seg = [u for u in seg if u in shape.pos]
    target = pair.green[i] if target is None else target
    sweeps = 0
    while max_sweeps is None or sweeps < max_sweeps:
        shape, seg, did = _segment_sweep(shape, seg, target)
        if not did:
            break
        sweeps += 1
    return shape, sweeps


@dataclass
class PrematureShrinkVerdict:
    i: int
    premature_collision: bool
    stage: str | None  # "premature" or "prefix" when a collision occurred
    collision_kinds: list
    in_order_ok: bool
    clearance: int | None
    expected_clearance: int | None


def check_premature_shrink(pair: SpiralPair, i: int) -> PrematureShrinkVerdict:
    """Shrink red segment i by one sweep before the red segments ahead of it.

    The verdict records whether that sweep, or the subsequent reduction of
    red segments 1..i-1, hits a collision, and whether the in-order schedule runs
    clean.
    """
    if pair.t_initial is None or i < 2 or i > pair.k - 3:
        raise IndexOutOfRange(f"i={i} outside [2, {pair.k - 3}]")
    stage = None
    kinds = []
    shape = pair.t_initial
    try:
        shape, _ = shrink_red_segment(shape, pair, i, max_sweeps=1)
    except CollisionError as exc:
        stage = "premature"
        kinds = sorted({r.kind for r in exc.reports})
    if stage is None:
        try:
            for j in range(1, i):
                shape, _ = shrink_red_segment(shape, pair, j)
        except CollisionError as exc:
            stage = "prefix"
            kinds = sorted({r.kind for r in exc.reports})
    in_order_ok = in_order_clean(pair)
    clearance = expected = None
    if 2 < i and i + 3 <= pair.k:
        clearance = spiral_clearance(pair, i)
        expected = pair.green[i - 2]
    return PrematureShrinkVerdict(i, stage is not None, stage, kinds, in_order_ok, clearance, expected)


def in_order_clean(pair: SpiralPair) -> bool:
    """Whether the in-order schedule runs without collisions (cached per pair)."""
    if pair.in_order_ok is None:
        try:
            _, per = run_in_order(pair)
            pair.in_order_ok = True
            pair.in_order_sweeps = per
        except CollisionError:
            pair.in_order_ok = False
    return pair.in_order_ok


def run_in_order(pair: SpiralPair):
    """Shrink the red segments in index order; returns (final shape, sweeps per segment)."""
    shape = pair.t_initial
    per = {}
    for i in pair.schedule:
        shape, per[i] = shrink_red_segment(shape, pair, i)
    return shape, per


def measure_sequential_rounds(pair: SpiralPair, simulate: bool = True) -> int:
    """Rounds of the in-order schedule, one round per halving sweep.

    With ``simulate`` the schedule runs through the collision-checked
    simulator; otherwise the sweep counts are evaluated arithmetically.
    """
    if not simulate or pair.t_initial is None:
        return sum(sweeps_needed(pair.red[i], pair.green[i]) for i in pair.schedule)
    if pair.in_order_sweeps is None:
        _, pair.in_order_sweeps = run_in_order(pair)
        pair.in_order_ok = True
    return sum(pair.in_order_sweeps.values())


# ---------------------------------------------------------------------------
# Topologically equivalent target pairs


@dataclass
class TargetPair:
    initial: Shape
    target_lengths: list
    final: Shape


def _line_gaps(coords):
    return [b - a - 1 for a, b in zip(coords, coords[1:])]


def gen_target_pair(n: int, k_max: int, seed: int) -> TargetPair:
    """Random tree plus a target obtained by resizing its column and row gaps.

    Each gap between consecutive turning-point columns (rows) gets a random
    new width in [0, 2w + 2]; gaps are then narrowed until no segment is
    longer than in the initial tree.  Resizing gaps keeps every relative
    position of turning points, so the pair is topologically equivalent.
    """
    from .algorithms.target import materialize_target
    from .grid import extract_segments

    tree = gen_random_tree(n, k_max, seed)
    rng = np.random.default_rng([seed, 1])
    segs = extract_segments(tree)
    tps = [u for u in tree.pos if is_turning_point(tree, u)]
    lines = [sorted({tree.pos[u][k] for u in tps}) for k in (0, 1)]
    rank = [{c: j for j, c in enumerate(ls)} for ls in lines]
    gaps = [_line_gaps(ls) for ls in lines]
    new = [[int(rng.integers(0, 2 * g + 3)) for g in gs] for gs in gaps]

    def seg_span(s):
        k = 0 if s.axis.value == "horizontal" else 1
        a, b = tree.pos[s.nodes[0]][k], tree.pos[s.nodes[-1]][k]
        a, b = sorted((a, b))
        return k, range(rank[k][a], rank[k][b])

    while True:
        bad = False
        for s in segs:
            k, span = seg_span(s)
            length = sum(new[k][j] + 1 for j in span) + 1
            if length > s.length:
                bad = True
                over = [j for j in span if new[k][j] > gaps[k][j]]
                j = over[int(rng.integers(len(over)))]
                new[k][j] = int(rng.integers(gaps[k][j], new[k][j]))
        if not bad:
            break
    lengths = []
    for s in segs:
        k, span = seg_span(s)
        lengths.append(sum(new[k][j] + 1 for j in span) + 1)
    return TargetPair(tree, lengths, materialize_target(tree, lengths))
