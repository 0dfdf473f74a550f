"""Growth and shrinking operations applied in parallel to a shape.

Motion is computed on a spanning tree rooted at the stationary anchor: each
operation translates the part of the tree that lies beyond it by one unit, and
a node's displacement is the sum of the contributions on its root path.
Because all operations of a round share one cardinal direction, every node
moves along a single axis and node collisions reduce to an order check per
grid line.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .circuits import UnionFind
from .errors import CollisionError, InvalidOperation, MixedDirectionError
from .grid import (
    DIRECTION_NAMES,
    DIRECTIONS,
    GraphModel,
    Shape,
    add,
    adjacency_closure,
    is_adjacent,
    neg,
    sub,
)


class OpKind(str, Enum):
    GROW = "grow"
    SHRINK = "shrink"


@dataclass(frozen=True)
class Operation:
    kind: OpKind
    actor: int
    direction: tuple[int, int]
    target: object  # absorbed node id (shrink) or grid point (grow)

    @classmethod
    def shrink(cls, shape: Shape, absorber, absorbed) -> Operation:
        d = sub(shape.pos[absorber], shape.pos[absorbed])
        return cls(OpKind.SHRINK, absorber, d, absorbed)

    @classmethod
    def grow(cls, shape: Shape, actor, direction) -> Operation:
        direction = tuple(direction)
        return cls(OpKind.GROW, actor, direction, add(shape.pos[actor], direction))

    def to_record(self) -> dict:
        return {"kind": self.kind.value, "node": self.actor, "direction": DIRECTION_NAMES[self.direction]}


@dataclass
class CollisionReport:
    kind: str  # "NodeCollision" | "CycleCollision"
    witnesses: tuple

    def to_record(self) -> dict:
        return {"kind": self.kind, "witnesses": [list(w) if isinstance(w, tuple) else w for w in self.witnesses]}


@dataclass
class MotionField:
    root: int
    displacement: dict[int, tuple[int, int]]
    parent: dict[int, int | None]
    removed: dict[int, int] = field(default_factory=dict)  # absorbed -> absorber
    created: list[tuple[int, tuple[int, int]]] = field(default_factory=list)  # (actor, direction)
    direction: tuple[int, int] | None = None

    def final(self, shape: Shape, u) -> tuple[int, int]:
        return add(shape.pos[u], self.displacement[u])


def validate_ops(shape: Shape, ops) -> tuple[int, int] | None:
    """Check local well-formedness and return the common direction."""
    ops = list(ops)
    if not ops:
        return None
    direction = ops[0].direction
    if direction not in DIRECTIONS:
        raise InvalidOperation(f"direction {direction} is not a cardinal unit vector")
    actors = set()
    absorbed = set()
    for op in ops:
        if op.direction != direction:
            raise MixedDirectionError("parallel operations must share one cardinal direction")
        if op.actor not in shape.pos:
            raise InvalidOperation(f"unknown actor {op.actor}")
        if op.actor in actors:
            raise InvalidOperation(f"node {op.actor} got more than one operation this round")
        actors.add(op.actor)
        if op.kind is OpKind.SHRINK:
            v = op.target
            if v not in shape.pos or v not in shape.adj[op.actor]:
                raise InvalidOperation(f"shrink: {v} is not a neighbor of {op.actor}")
            if not is_adjacent(shape.pos[op.actor], shape.pos[v]) or sub(shape.pos[op.actor], shape.pos[v]) != op.direction:
                raise InvalidOperation(f"shrink: direction of ({op.actor},{v}) does not match")
            if v in absorbed:
                raise InvalidOperation(f"node {v} absorbed twice")
            absorbed.add(v)
        elif op.target != add(shape.pos[op.actor], op.direction):
            raise InvalidOperation("grow target must be the adjacent point in the grow direction")
    if absorbed & actors:
        raise InvalidOperation("a node cannot act and be absorbed in the same round")
    for op in ops:
        if op.kind is OpKind.GROW:
            v = shape.at.get(op.target)
            if v is not None and v in absorbed:
                raise InvalidOperation("cannot grow into a node absorbed in the same round")
    return direction


def _spanning_parent(shape: Shape, root, op_edges):
    """Rooted spanning tree containing every operation edge."""
    if shape.num_edges() == shape.n - 1:
        adj = shape.adj
    else:
        uf = UnionFind(shape.pos)
        adj = {u: set() for u in shape.pos}
        for a, b in op_edges:
            if uf.union(a, b):
                adj[a].add(b)
                adj[b].add(a)
        seen = {root}
        q = deque([root])
        while q:
            u = q.popleft()
            for v in sorted(shape.adj[u]):
                if uf.union(u, v):
                    adj[u].add(v)
                    adj[v].add(u)
                if v not in seen:
                    seen.add(v)
                    q.append(v)
    parent = {root: None}
    order = [root]
    q = deque([root])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                order.append(v)
                q.append(v)
    return parent, order, adj


def choose_root(shape: Shape, anchor, ops):
    if anchor is None:
        anchor = shape.anchor if shape.anchor is not None else min(shape.pos)
    for op in ops:
        if op.kind is OpKind.SHRINK and op.target == anchor:
            return op.actor
    return anchor


def motion_vectors(shape: Shape, anchor, ops) -> MotionField:
    ops = list(ops)
    direction = validate_ops(shape, ops)
    root = choose_root(shape, anchor, ops)
    op_edges = []
    for op in ops:
        if op.kind is OpKind.SHRINK:
            op_edges.append((op.actor, op.target))
        else:
            v = shape.at.get(op.target)
            if v is not None and v in shape.adj[op.actor]:
                op_edges.append((op.actor, v))
    parent, order, tree_adj = _spanning_parent(shape, root, op_edges)
    shift = {}
    removed = {}
    created = []

    def bump(node, vec):
        s = shift.get(node)
        shift[node] = vec if s is None else (s[0] + vec[0], s[1] + vec[1])

    for op in ops:
        d = op.direction
        u = op.actor
        if op.kind is OpKind.SHRINK:
            v = op.target
            removed[v] = u
            if parent[v] == u:
                for w in tree_adj[v]:
                    if w != u:
                        bump(w, d)
            else:
                bump(u, neg(d))
        else:
            created.append((u, d))
            v = shape.at.get(op.target)
            if v is not None and v in shape.adj[u]:
                if parent[v] == u:
                    bump(v, d)
                else:
                    bump(u, neg(d))
    disp = {root: shift.get(root, (0, 0))}
    for x in order[1:]:
        p = disp[parent[x]]
        s = shift.get(x)
        disp[x] = p if s is None else (p[0] + s[0], p[1] + s[1])
    return MotionField(root, disp, parent, removed, created, direction)


def _handover_frame(field: MotionField, shape: Shape, x):
    d = field.displacement[x]
    u = field.removed.get(x)
    if u is not None and field.parent.get(x) == u:
        step = sub(shape.pos[u], shape.pos[x])
        return (d[0] + step[0], d[1] + step[1])
    return d


def detect_node_collisions(shape: Shape, field: MotionField, ops=None) -> list[CollisionReport]:
    """Trajectory overlaps among surviving and newly generated nodes.

    Absorbed nodes travel into their absorber and are dominated by it, so
    only survivors and new nodes are compared.  Positions are doubled so a
    new node can start half a cell ahead of its creator.
    """
    d = field.direction
    if d is None:
        return []
    ax = 0 if d[1] == 0 else 1
    ids, line, start, end = [], [], [], []
    for u, p in shape.pos.items():
        if u in field.removed:
            continue
        q = field.displacement[u]
        ids.append(u)
        line.append(p[1 - ax])
        start.append(2 * p[ax])
        end.append(2 * (p[ax] + q[ax]))
    for actor, dd in field.created:
        p = shape.pos[actor]
        q = field.displacement[actor]
        ids.append(("new", actor))
        line.append(p[1 - ax])
        start.append(2 * p[ax] + dd[ax])
        end.append(2 * (p[ax] + q[ax] + dd[ax]))
    line = np.asarray(line, dtype=np.int64)
    start = np.asarray(start, dtype=np.int64)
    end = np.asarray(end, dtype=np.int64)
    order = np.lexsort((start, line))
    ls, es = line[order], end[order]
    bad = np.nonzero((ls[1:] == ls[:-1]) & (es[1:] - es[:-1] < 2))[0]
    reports = []
    for i in bad[:16]:
        a, b = ids[order[i]], ids[order[i + 1]]
        reports.append(CollisionReport("NodeCollision", (a, b)))
    return reports


def detect_cycle_collisions(shape: Shape, ops, anchor=None, field: MotionField | None = None) -> list[CollisionReport]:
    """Edges whose endpoints would be displaced inconsistently.

    Comparing the two frames of every non-operation edge is the same as
    comparing the displacement sums of the two paths around each
    fundamental cycle.
    """
    ops = list(ops)
    if shape.num_edges() == shape.n - 1 or not ops:
        return []
    if field is None:
        field = motion_vectors(shape, anchor, ops)
    op_pairs = set()
    for op in ops:
        if op.kind is OpKind.SHRINK:
            op_pairs.add(frozenset((op.actor, op.target)))
        else:
            v = shape.at.get(op.target)
            if v is not None:
                op_pairs.add(frozenset((op.actor, v)))
    reports = []
    for a, b in shape.edges():
        if frozenset((a, b)) in op_pairs:
            continue
        if field.parent.get(a) == b or field.parent.get(b) == a:
            # tree edges are consistent by construction
            continue
        fa = _handover_frame(field, shape, a)
        fb = _handover_frame(field, shape, b)
        if fa != fb:
            reports.append(CollisionReport("CycleCollision", (a, b, fa, fb)))
    return reports


def apply_operations(shape: Shape, anchor, ops, return_field=False):
    """Apply ``ops`` atomically; raise :class:`CollisionError` and leave ``shape`` untouched on failure."""
    ops = list(ops)
    if not ops:
        out = shape.copy()
        return (out, None) if return_field else out
    field = motion_vectors(shape, anchor, ops)
    reports = detect_node_collisions(shape, field, ops)
    reports += detect_cycle_collisions(shape, ops, field=field)
    if reports:
        raise CollisionError(reports)
    out = Shape.__new__(Shape)
    out.model = shape.model
    out._at = None
    out._next_id = shape._next_id
    disp = field.displacement
    removed = field.removed
    out.pos = {}
    for u, p in shape.pos.items():
        if u in removed:
            continue
        q = disp[u]
        out.pos[u] = (p[0] + q[0], p[1] + q[1]) if q != (0, 0) else p
    out.adj = {u: {v for v in shape.adj[u] if v not in removed} for u in out.pos}
    for v, u in removed.items():
        for w in shape.adj[v]:
            if w != u and w not in removed:
                out.adj[u].add(w)
                out.adj[w].add(u)
    # chains of absorbed neighbors (adjacency model) are re-linked by the closure
    for op in ops:
        if op.kind is OpKind.GROW:
            u = op.actor
            new = out.new_id()
            out.pos[new] = add(out.pos[u], op.direction)
            out.adj[new] = {u}
            v = shape.at.get(op.target)
            if v is not None and v in shape.adj[u]:
                out.adj[u].discard(v)
                out.adj[v].discard(u)
                out.adj[v].add(new)
                out.adj[new].add(v)
            out.adj[u].add(new)
    out.anchor = field.root
    if out.model is GraphModel.ADJACENCY:
        out = adjacency_closure(out)
        out.anchor = field.root
    if len(out.at) != out.n:
        raise CollisionError([CollisionReport("NodeCollision", ("overlap after apply",))])
    return (out, field) if return_field else out
