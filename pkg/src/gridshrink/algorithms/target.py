"""Reshaping a tree into a topologically equivalent tree with shorter segments.

Segment lengths of the target are given per segment of the initial tree (in
:func:`extract_segments` order).  Topological equivalence means the
turning-point columns and rows keep their order, so the reshaping resizes
each gap between consecutive incompressible columns (rows) in lock step:
first by growth, then by shrinking, each in O(log n) iterations.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from ..errors import CapacityError, DuplicatePoint, NotATree, NotTopologicallyEquivalent, TargetTooLong
from ..grid import EAST, NORTH, Axis, Shape, extract_segments, is_turning_point, relative_position, sub
from ..ops import Operation
from ..primitives import (
    StoredValue,
    elect_from_set,
    nodes_needed,
    pasc_length,
    pasc_mark_first,
    preprocessing_oracle,
    segment_arith,
    spatial_pasc,
    transfer_value,
)
from .run import AlgorithmRun, Recorder


def _check_lengths(segments, target_lengths):
    if len(target_lengths) != len(segments):
        raise TargetTooLong(f"expected {len(segments)} target lengths, got {len(target_lengths)}")
    for i, seg in enumerate(segments):
        f = target_lengths[i]
        if f > seg.length:
            raise TargetTooLong(f"segment {i}: target {f} exceeds initial {seg.length}")
        if f < 2:
            raise ValueError(f"segment {i}: a segment has at least two nodes")


def _unit(seg, shape):
    a, b = shape.pos[seg.nodes[0]], shape.pos[seg.nodes[1]]
    return sub(b, a)


def materialize_target(tree: Shape, target_lengths) -> Shape:
    """Centralized target tree: the same skeleton walked with the target lengths.

    Turning points keep their ids; segment i keeps its first
    ``target_lengths[i] - 2`` interior nodes.
    """
    if not tree.is_tree():
        raise NotATree("the initial shape must be a tree")
    segs = extract_segments(tree, check=False)
    if tree.n == 1:
        return tree.copy()
    _check_lengths(segs, target_lengths)
    by_tp = {}
    for i, s in enumerate(segs):
        for t in s.endpoints:
            by_tp.setdefault(t, []).append(i)
    root = segs[0].nodes[0]
    pos = {root: tree.pos[root]}
    q = deque([root])
    while q:
        t = q.popleft()
        for i in by_tp[t]:
            s = segs[i]
            d = _unit(s, tree)
            a, b = s.endpoints
            f = target_lengths[i] - 1
            if a == t and b not in pos:
                pos[b] = (pos[a][0] + d[0] * f, pos[a][1] + d[1] * f)
                q.append(b)
            elif b == t and a not in pos:
                pos[a] = (pos[b][0] - d[0] * f, pos[b][1] - d[1] * f)
                q.append(a)
    adj = {}
    for i, s in enumerate(segs):
        d = _unit(s, tree)
        kept = s.nodes[1 : target_lengths[i] - 1]
        a = s.nodes[0]
        for t, u in enumerate(kept, 1):
            pos[u] = (pos[a][0] + d[0] * t, pos[a][1] + d[1] * t)
        run = [a] + kept + [s.nodes[-1]]
        for u, v in zip(run, run[1:]):
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
    if len(set(pos.values())) != len(pos):
        raise DuplicatePoint("target segment lengths make the tree overlap itself")
    anchor = tree.anchor if tree.anchor in pos else root
    return Shape(pos, adj, anchor=anchor, model=tree.model)


@dataclass
class Overlay:
    participating: set  # turning points plus marked interior nodes
    virtual: dict  # participating node -> coordinates in the simulated target
    rounds: int

    def shape(self, tree: Shape) -> Shape:
        """Participating nodes at their virtual coordinates, linked by forwarding."""
        adj = {u: set() for u in self.participating}
        for s in extract_segments(tree, check=False):
            run = [u for u in s.nodes if u in self.participating]
            for u, v in zip(run, run[1:]):
                adj[u].add(v)
                adj[v].add(u)
        if len(set(self.virtual.values())) != len(self.virtual):
            raise DuplicatePoint("overlay nodes coincide")
        return Shape(dict(self.virtual), adj)


def simulate_target_overlay(tree: Shape, target_lengths, rec: Recorder | None = None) -> Overlay:
    """Mark |s^F_i| - 2 interior nodes per segment; the rest only forward.

    Virtual coordinates come from forwarding unit steps along the tree:
    a node advances the coordinate it received only if it participates.
    """
    segs = extract_segments(tree, check=False)
    _check_lengths(segs, target_lengths)
    part = {u for u in tree.pos if is_turning_point(tree, u)}
    rounds = 0
    for i, s in enumerate(segs):
        inner = s.nodes[1:-1]
        if inner:
            mask, r = pasc_mark_first(len(inner), target_lengths[i] - 2)
            rounds = max(rounds, r)
            part.update(u for u, m in zip(inner, mask) if m)
    root = segs[0].nodes[0] if segs else next(iter(tree.pos))
    virtual = {root: tree.pos[root]}
    carried = {root: tree.pos[root]}
    q = deque([root])
    while q:
        u = q.popleft()
        for v in tree.adj[u]:
            if v in carried:
                continue
            base = carried[u]
            if v in part:
                d = sub(tree.pos[v], tree.pos[u])
                virtual[v] = carried[v] = (base[0] + d[0], base[1] + d[1])
            else:
                carried[v] = base
            q.append(v)
    if rec is not None:
        for u in tree.pos:
            rec.set_state(u, mark=u in part)
        rec.comm(rounds)
    return Overlay(part, virtual, rounds)


def topological_equivalence_test(tree: Shape, target_lengths, rec: Recorder | None = None,
                                 overlay: Overlay | None = None) -> bool:
    """Compare every turning point's view of the others on the initial tree and on the overlay."""
    overlay = overlay or simulate_target_overlay(tree, target_lengths)
    tps = [u for u in tree.pos if is_turning_point(tree, u)]
    try:
        vshape = overlay.shape(tree)
    except DuplicatePoint:
        vshape = None
    violation = False
    rounds = 0
    remaining = set(tps)
    while remaining:
        t, r = elect_from_set(remaining, tree)
        remaining.discard(t)
        real = spatial_pasc(tree, t)
        rounds += r + real.rounds
        if vshape is None:
            violation = True
            continue
        virt = spatial_pasc(vshape, t)
        rounds += virt.rounds
        for u in tps:
            if real.position(u) != virt.position(u):
                violation = True
    rounds += 1  # violators beep on a shape-wide circuit
    if rec is not None:
        rec.comm(rounds, beeps=int(violation))
    return not violation


def tp_relations(shape: Shape):
    """Relative position of every ordered turning-point pair (centralized)."""
    tps = sorted(u for u in shape.pos if is_turning_point(shape, u))
    return {(a, b): relative_position(shape.pos[a], shape.pos[b]) for a in tps for b in tps if a != b}


# ---------------------------------------------------------------------------
# the reshaping itself


@dataclass
class _Chain:
    axis: Axis
    head: int  # incompressible node preceding the compressible run
    segment: int  # index of the initial segment holding the chain
    initial: int  # chain length in the initial tree
    final: int  # chain length in the target


def _chains(tree, line_flag, line_map):
    """One chain per pair of consecutive incompressible nodes along each segment.

    ``line_map[k]`` sends an incompressible line of the initial tree to its coordinate in
    the target, so the target gap is read off the turning points.
    """
    out = []
    for i, s in enumerate(extract_segments(tree, check=False)):
        k = 0 if s.axis is Axis.HORIZONTAL else 1
        heads = [j for j, u in enumerate(s.nodes) if line_flag[u][k]]
        for a, b in zip(heads, heads[1:]):
            pa, pb = tree.pos[s.nodes[a]][k], tree.pos[s.nodes[b]][k]
            final = line_map[k][pb] - line_map[k][pa] - 1
            out.append(_Chain(s.axis, s.nodes[a], i, b - a - 1, final))
    return out


def _current(shape, chain, line_flag):
    """[head, c_1, ..., c_C] in the current shape."""
    k = 0 if chain.axis is Axis.HORIZONTAL else 1
    d = EAST if k == 0 else NORTH
    at = shape.at
    nodes = [chain.head]
    p = shape.pos[chain.head]
    while True:
        p = (p[0] + d[0], p[1] + d[1])
        u = at[p]
        if u in line_flag and line_flag[u][k]:
            return nodes
        nodes.append(u)


def _capacity(chains, seg_len):
    need = {}
    for c in chains:
        top = max(c.initial, c.final)
        need[c.segment] = need.get(c.segment, 0) + math.ceil(math.ceil(math.log2(top + 2)) / 2)
    for i, v in need.items():
        if v > seg_len[i]:
            raise CapacityError(f"segment {i}: {v} storage nodes exceed length {seg_len[i]}")
    return need


def _iteration_rounds(sizes, grow):
    """Rounds to compute every m_j, mark the acting nodes and restore storage."""
    worst = 0
    for c, f, m in sizes:
        cv, fv = StoredValue.from_int(c, nodes_needed(max(c, f) + 1)), StoredValue.from_int(f, nodes_needed(max(c, f) + 1))
        r = segment_arith("cmp", cv, fv)[1] + 2 * 2  # compare, two subtractions
        width = c + 1
        _, rm = pasc_mark_first(width, min(width, m if grow else 2 * m))
        _, _, rt = transfer_value(StoredValue.from_int(max(c, f) + 1, nodes_needed(max(c, f) + 1)),
                                  nodes_needed(max(c, f) + 1))
        worst = max(worst, r + rm + rt)
    return worst


def _segment_length(shape, ends):
    a, b = shape.pos[ends[0]], shape.pos[ends[1]]
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) + 1


def _phase(rec, chains, line_flag, grow, seg_ends, seg_len):
    iterations = 0
    while True:
        plan = []
        for ch in chains:
            nodes = _current(rec.shape, ch, line_flag)
            c = len(nodes) - 1
            if grow:
                m = min(ch.final - c, c + 1) if ch.final > c else 0
            else:
                m = min(c - ch.final, (c + 1) // 2) if c > ch.final else 0
            plan.append((ch, nodes, c, m))
        if not any(m for *_, m in plan):
            return iterations
        _capacity(chains, seg_len)
        # working subsegments of one segment must be disjoint
        used = {}
        for ch, nodes, c, m in plan:
            used[ch.segment] = used.get(ch.segment, 0) + c + 1
        for i, u in used.items():
            if u > _segment_length(rec.shape, seg_ends[i]):
                raise CapacityError(f"segment {i}: working subsegments overlap")
        rec.comm(_iteration_rounds([(c, ch.final, m) for ch, _, c, m in plan if m], grow))
        for axis, d in ((Axis.HORIZONTAL, EAST), (Axis.VERTICAL, NORTH)):
            ops = []
            for ch, nodes, c, m in plan:
                if ch.axis is not axis or not m:
                    continue
                for u in nodes:
                    rec.set_state(u, grow=int(grow), act=0)
                if grow:
                    ops += [Operation.grow(rec.shape, u, d) for u in nodes[:m]]
                else:
                    ops += [Operation.shrink(rec.shape, nodes[2 * t], nodes[2 * t + 1]) for t in range(m)]
            if ops:
                rec.apply(ops)
        iterations += 1


def target_tree(tree: Shape, target_lengths, check_equivalence: bool = True, c0: float = 1.0, budget: int = 64,
                strict: bool = True, keep_traces: bool = True, snapshots: bool = False) -> AlgorithmRun:
    if not tree.is_tree():
        raise NotATree("target_tree needs a tree")
    target_lengths = [int(x) for x in target_lengths]
    pre = preprocessing_oracle(tree, leader=True, compass=True, chirality=True, c0=c0)
    run = AlgorithmRun("target", tree, {"target_lengths": target_lengths}, preprocessing_rounds=pre.rounds)
    rec = Recorder(tree, budget=budget, strict=strict, keep_traces=keep_traces, snapshots=snapshots)
    if tree.n == 1:
        rec.finish(run)
        return run
    segs = extract_segments(tree, check=False)
    overlay = simulate_target_overlay(tree, target_lengths, rec)
    if check_equivalence and not topological_equivalence_test(tree, target_lengths, rec, overlay):
        raise NotTopologicallyEquivalent("target is not topologically equivalent to the initial tree")

    # incompressible lines of the initial tree; they stay incompressible throughout
    tps = [u for u in tree.pos if is_turning_point(tree, u)]
    cols = {tree.pos[u][0] for u in tps}
    rows = {tree.pos[u][1] for u in tps}
    line_flag = {u: (p[0] in cols, p[1] in rows) for u, p in tree.pos.items()}
    for u in tree.pos:
        rec.set_state(u, col=line_flag[u][0], row=line_flag[u][1])
    line_map = ({tree.pos[u][0]: overlay.virtual[u][0] for u in tps},
                {tree.pos[u][1]: overlay.virtual[u][1] for u in tps})
    chains = _chains(tree, line_flag, line_map)
    # initial and target chain lengths, plus one, move into their storage subsegments
    first = 0
    for ch in chains:
        _, r1 = pasc_length(ch.initial + 1)
        _, r2 = pasc_length(ch.final + 1)
        first = max(first, r1 + r2)
    rec.comm(first)
    seg_ends = [s.endpoints for s in segs]
    seg_len = [s.length for s in segs]
    _capacity(chains, seg_len)
    g = _phase(rec, chains, line_flag, True, seg_ends, seg_len)
    s = _phase(rec, chains, line_flag, False, seg_ends, seg_len)
    rec.finish(run)
    run.stats.update(growth_iterations=g, shrink_iterations=s, iterations=g + s,
                     iteration_bound=3 * math.ceil(math.log2(tree.n)), overlay_rounds=overlay.rounds)
    return run
