"""Grid shapes and the centralized geometry used to validate the distributed algorithms.

A :class:`Shape` stores node positions and an explicit edge set keyed by
integer node ids.  Ids are harness bookkeeping only; node programs never see
them.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    Disconnected,
    DuplicatePoint,
    NonAdjacentEdge,
    NotATree,
    ParseError,
)

Point = tuple[int, int]

NORTH = (0, 1)
EAST = (1, 0)
SOUTH = (0, -1)
WEST = (-1, 0)
# Fixed local order used for tie-breaking and pin labelling.
DIRECTIONS = (NORTH, EAST, SOUTH, WEST)
DIRECTION_NAMES = {NORTH: "N", EAST: "E", SOUTH: "S", WEST: "W"}
NAMED_DIRECTIONS = {v: k for k, v in DIRECTION_NAMES.items()}


class GraphModel(str, Enum):
    CONNECTIVITY = "connectivity"
    ADJACENCY = "adjacency"


def sub(a: Point, b: Point) -> Point:
    return (a[0] - b[0], a[1] - b[1])


def add(a: Point, b: Point) -> Point:
    return (a[0] + b[0], a[1] + b[1])


def neg(a: Point) -> Point:
    return (-a[0], -a[1])


def is_adjacent(a: Point, b: Point) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


class Shape:
    """Connected set of grid nodes with an explicit edge set."""

    __slots__ = ("pos", "adj", "anchor", "model", "_at", "_next_id")

    def __init__(self, pos=None, adj=None, anchor=None, model=GraphModel.CONNECTIVITY):
        self.pos: dict[int, Point] = dict(pos or {})
        self.adj: dict[int, set[int]] = {u: set(adj.get(u, ())) if adj else set() for u in self.pos}
        self.anchor = anchor
        self.model = GraphModel(model)
        self._at = None
        self._next_id = max(self.pos, default=-1) + 1

    @classmethod
    def from_points(cls, points, edges=(), anchor=None, model=GraphModel.CONNECTIVITY):
        pos = {i: (int(p[0]), int(p[1])) for i, p in enumerate(points)}
        adj = {i: set() for i in pos}
        for i, j in edges:
            adj[i].add(j)
            adj[j].add(i)
        return cls(pos, adj, anchor, model)

    @classmethod
    def path(cls, points, anchor=0, model=GraphModel.CONNECTIVITY):
        edges = [(i, i + 1) for i in range(len(points) - 1)]
        return cls.from_points(points, edges, anchor, model)

    @classmethod
    def from_cells(cls, cells, anchor=None):
        """Adjacency-closed shape over ``cells``."""
        cells = [tuple(c) for c in cells]
        index = {c: i for i, c in enumerate(cells)}
        edges = []
        for c, i in index.items():
            for d in (EAST, NORTH):
                j = index.get(add(c, d))
                if j is not None:
                    edges.append((i, j))
        return cls.from_points(cells, edges, anchor, GraphModel.ADJACENCY)

    def copy(self) -> Shape:
        s = Shape.__new__(Shape)
        s.pos = dict(self.pos)
        s.adj = {u: set(v) for u, v in self.adj.items()}
        s.anchor = self.anchor
        s.model = self.model
        s._at = None
        s._next_id = self._next_id
        return s

    @property
    def n(self) -> int:
        return len(self.pos)

    def nodes(self):
        return self.pos.keys()

    def edges(self):
        return [(u, v) for u, nb in self.adj.items() for v in nb if u < v]

    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.adj.values()) // 2

    @property
    def at(self) -> dict[Point, int]:
        if self._at is None:
            self._at = {p: u for u, p in self.pos.items()}
        return self._at

    def new_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def degree(self, u) -> int:
        return len(self.adj[u])

    def is_tree(self) -> bool:
        return self.num_edges() == self.n - 1 and is_connected(self)

    def bounds(self):
        xs = [p[0] for p in self.pos.values()]
        ys = [p[1] for p in self.pos.values()]
        return min(xs), max(xs), min(ys), max(ys)

    def columns(self) -> int:
        return len({p[0] for p in self.pos.values()})

    def rows(self) -> int:
        return len({p[1] for p in self.pos.values()})

    def __repr__(self):
        return f"Shape(n={self.n}, edges={self.num_edges()}, model={self.model.value})"


def is_connected(shape: Shape) -> bool:
    if shape.n == 0:
        return True
    start = next(iter(shape.pos))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in shape.adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == shape.n


def validate(shape: Shape) -> Shape:
    seen = {}
    for u, p in shape.pos.items():
        if p in seen:
            raise DuplicatePoint(f"nodes {seen[p]} and {u} both occupy {p}")
        seen[p] = u
    for u, v in shape.edges():
        if not is_adjacent(shape.pos[u], shape.pos[v]):
            raise NonAdjacentEdge(f"edge ({u},{v}) joins {shape.pos[u]} and {shape.pos[v]}")
    if not is_connected(shape):
        raise Disconnected("shape graph is not connected")
    return shape


def adjacency_closure(shape: Shape) -> Shape:
    """Return a copy whose edges are all orthogonally adjacent pairs."""
    out = shape.copy()
    at = out.at
    for u, p in out.pos.items():
        for d in DIRECTIONS:
            v = at.get(add(p, d))
            if v is not None:
                out.adj[u].add(v)
    return out


# -- documents -----------------------------------------------------------

@dataclass
class ShapeDocument:
    shape: Shape
    incompressible: list[int] | None = None
    target_lengths: dict[str, int] | None = None
    ids: list[int] = field(default_factory=list)


def load_shape(document) -> Shape:
    """Parse and validate a shape document (JSON text, bytes or mapping)."""
    return load_document(document).shape


def load_document(document) -> ShapeDocument:
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc)) from exc
    if not isinstance(document, dict) or "nodes" not in document:
        raise ParseError("shape document needs a 'nodes' list")
    try:
        points = [(int(x), int(y)) for x, y in document["nodes"]]
        edges = [(int(i), int(j)) for i, j in document.get("edges", [])]
        model = GraphModel(document.get("graph_model", "connectivity"))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed shape document: {exc}") from exc
    n = len(points)
    if n == 0:
        raise ParseError("shape has no nodes")
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ParseError(f"bad edge ({i},{j})")
    anchor = document.get("anchor")
    if anchor is not None and not 0 <= int(anchor) < n:
        raise ParseError(f"anchor {anchor} out of range")
    shape = Shape.from_points(points, edges, None if anchor is None else int(anchor), model)
    validate(shape)
    if model is GraphModel.ADJACENCY:
        shape = adjacency_closure(shape)
    inc = document.get("incompressible")
    tl = document.get("target_lengths")
    return ShapeDocument(
        shape=shape,
        incompressible=None if inc is None else [int(i) for i in inc],
        target_lengths=None if tl is None else {str(k): int(v) for k, v in tl.items()},
        ids=list(range(n)),
    )


def dump_shape(shape: Shape, **extra) -> dict:
    ids = sorted(shape.pos)
    index = {u: i for i, u in enumerate(ids)}
    doc = {
        "nodes": [list(shape.pos[u]) for u in ids],
        "edges": sorted([sorted((index[u], index[v])) for u, v in shape.edges()]),
        "graph_model": shape.model.value,
    }
    if shape.anchor is not None and shape.anchor in index:
        doc["anchor"] = index[shape.anchor]
    doc.update(extra)
    return doc


# -- classification ------------------------------------------------------

class NodeKind(str, Enum):
    LEAF = "leaf"
    TURNING_POINT = "turning_point"
    SEGMENT_NODE = "segment_node"
    OTHER = "other"


@dataclass(frozen=True)
class NodeClass:
    kind: NodeKind
    degree: int

    @property
    def is_turning_point(self) -> bool:
        return self.kind in (NodeKind.LEAF, NodeKind.TURNING_POINT)


def is_turning_point(shape: Shape, u) -> bool:
    nb = shape.adj[u]
    if len(nb) <= 1:
        return True
    p = shape.pos[u]
    dirs = [sub(shape.pos[v], p) for v in nb]
    horizontal = any(d[1] == 0 for d in dirs)
    vertical = any(d[0] == 0 for d in dirs)
    return horizontal and vertical


def classify_nodes(shape: Shape) -> dict[int, NodeClass]:
    out = {}
    for u in shape.pos:
        deg = len(shape.adj[u])
        if deg <= 1:
            kind = NodeKind.LEAF
        elif is_turning_point(shape, u):
            kind = NodeKind.TURNING_POINT
        elif deg == 2:
            kind = NodeKind.SEGMENT_NODE
        else:
            kind = NodeKind.OTHER
        out[u] = NodeClass(kind, max(deg, 1) if deg else 0)
    return out


def turning_points(shape: Shape) -> list[int]:
    return [u for u in shape.pos if is_turning_point(shape, u)]


class Axis(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass
class Segment:
    nodes: list[int]
    axis: Axis

    @property
    def endpoints(self):
        return self.nodes[0], self.nodes[-1]

    @property
    def length(self) -> int:
        return len(self.nodes)


def _require_tree(shape: Shape):
    if not shape.is_tree():
        raise NotATree(f"{shape!r} is not a tree")


def extract_segments(tree: Shape, check: bool = True) -> list[Segment]:
    """Maximal straight runs between consecutive turning points.

    Each segment starts at its turning point with the smaller (x, y)
    coordinate so the orientation is canonical (east / north).
    """
    if check:
        _require_tree(tree)
    tps = {u for u in tree.pos if is_turning_point(tree, u)}
    segments = []
    seen_edges = set()
    for t in tps:
        for v in tree.adj[t]:
            if (t, v) in seen_edges:
                continue
            d = sub(tree.pos[v], tree.pos[t])
            run = [t, v]
            while run[-1] not in tps:
                w = tree.at.get(add(tree.pos[run[-1]], d))
                # interior nodes have degree 2 and are collinear
                run.append(w)
            seen_edges.add((run[-2], run[-1]))
            seen_edges.add((run[-1], run[-2]))
            seen_edges.add((t, v))
            if d in (WEST, SOUTH):
                run.reverse()
            axis = Axis.HORIZONTAL if d[1] == 0 else Axis.VERTICAL
            segments.append(Segment(run, axis))
    segments.sort(key=lambda s: (tree.pos[s.nodes[0]], s.axis.value))
    return segments


# -- compressibility -------------------------------------------------------

@dataclass
class CompressibilityMap:
    columns: dict[int, bool]  # x -> compressible
    rows: dict[int, bool]  # y -> compressible
    incompressible: dict[int, bool]  # node -> incompressible


def compressibility(shape: Shape) -> CompressibilityMap:
    tp_cols = set()
    tp_rows = set()
    for u in shape.pos:
        if is_turning_point(shape, u):
            x, y = shape.pos[u]
            tp_cols.add(x)
            tp_rows.add(y)
    cols = {p[0]: p[0] not in tp_cols for p in shape.pos.values()}
    rows = {p[1]: p[1] not in tp_rows for p in shape.pos.values()}
    inc = {u: (not cols[p[0]]) or (not rows[p[1]]) for u, p in shape.pos.items()}
    return CompressibilityMap(cols, rows, inc)


def incompressible_form_oracle(tree: Shape) -> Shape:
    """Centralized i(T): drop every compressible column and row."""
    _require_tree(tree)
    cmap = compressibility(tree)
    keep_x = sorted(x for x, c in cmap.columns.items() if not c)
    keep_y = sorted(y for y, c in cmap.rows.items() if not c)
    rank_x = {x: i for i, x in enumerate(keep_x)}
    rank_y = {y: i for i, y in enumerate(keep_y)}
    kept = [u for u, p in tree.pos.items() if p[0] in rank_x and p[1] in rank_y]
    index = {u: i for i, u in enumerate(kept)}
    points = [(rank_x[tree.pos[u][0]], rank_y[tree.pos[u][1]]) for u in kept]
    edges = set()
    for seg in extract_segments(tree, check=False):
        run = [u for u in seg.nodes if u in index]
        for a, b in zip(run, run[1:]):
            edges.add((index[a], index[b]))
    anchor = index.get(tree.anchor) if tree.anchor is not None else None
    return Shape.from_points(points, sorted(edges), anchor if anchor is not None else 0)


def canonical(shape: Shape):
    """Translation-normalized (points, edges) for comparing shapes."""
    if shape.n == 0:
        return frozenset(), frozenset()
    mx = min(p[0] for p in shape.pos.values())
    my = min(p[1] for p in shape.pos.values())
    norm = {u: (p[0] - mx, p[1] - my) for u, p in shape.pos.items()}
    pts = frozenset(norm.values())
    edges = frozenset(frozenset((norm[u], norm[v])) for u, v in shape.edges())
    return pts, edges


def same_up_to_translation(a: Shape, b: Shape) -> bool:
    return canonical(a) == canonical(b)


# -- equivalence -----------------------------------------------------------

class Horizontal(str, Enum):
    EAST = "E"
    ZERO = "0"
    WEST = "W"


class Vertical(str, Enum):
    NORTH = "N"
    ZERO = "0"
    SOUTH = "S"


@dataclass(frozen=True)
class RelativePosition:
    horizontal: Horizontal
    vertical: Vertical


def relative_position(u: Point, v: Point) -> RelativePosition:
    """Position of ``v`` seen from ``u``."""
    h = Horizontal.EAST if u[0] < v[0] else Horizontal.ZERO if u[0] == v[0] else Horizontal.WEST
    w = Vertical.NORTH if u[1] < v[1] else Vertical.ZERO if u[1] == v[1] else Vertical.SOUTH
    return RelativePosition(h, w)


def default_root(tree: Shape) -> int:
    if tree.anchor is not None and tree.anchor in tree.pos and is_turning_point(tree, tree.anchor):
        return tree.anchor
    tps = turning_points(tree)
    return min(tps, key=lambda u: tree.pos[u])


def turning_point_skeleton(tree: Shape, root=None):
    """Canonical traversal of the turning-point tree.

    Returns ``(order, structure, lengths)``: turning points in traversal
    order, a nested tuple of outgoing directions shared by geometrically
    equivalent trees, and the segment lengths in traversal order.
    """
    if root is None:
        root = default_root(tree)
    if tree.n == 1:
        return [root], (), []
    tps = {u for u in tree.pos if is_turning_point(tree, u)}
    order = [root]
    lengths = []
    top = []
    # stack items: (turning point, node we came from, child list to fill)
    stack = [(root, None, top)]
    while stack:
        t, came_from, out = stack.pop()
        p = tree.pos[t]
        pending = []
        for d in DIRECTIONS:
            v = tree.at.get(add(p, d))
            if v is None or v not in tree.adj[t] or v == came_from:
                continue
            prev, cur, steps = t, v, 1
            while cur not in tps:
                prev, cur = cur, tree.at[add(tree.pos[cur], d)]
                steps += 1
            child = []
            out.append((DIRECTION_NAMES[d], child))
            pending.append((cur, prev, child, steps + 1))
        for cur, prev, child, length in pending:
            order.append(cur)
            lengths.append(length)
        for cur, prev, child, _ in reversed(pending):
            stack.append((cur, prev, child))

    def freeze(items):
        return tuple((d, freeze(c)) for d, c in items)

    return order, freeze(top), lengths


def equivalence_check(a: Shape, b: Shape, root_a=None, root_b=None) -> dict[str, bool]:
    _require_tree(a)
    _require_tree(b)
    oa, sa, _ = turning_point_skeleton(a, root_a)
    ob, sb, _ = turning_point_skeleton(b, root_b)
    geometric = sa == sb and len(oa) == len(ob)
    if not geometric:
        return {"geometric": False, "topological": False}
    pa = [a.pos[u] for u in oa]
    pb = [b.pos[u] for u in ob]
    topological = all(
        relative_position(pa[i], pa[j]) == relative_position(pb[i], pb[j])
        for i in range(len(pa))
        for j in range(i + 1, len(pa))
    )
    return {"geometric": True, "topological": topological}


def bfs_order(shape: Shape, root):
    """Breadth-first parent map and visiting order from ``root``."""
    parent = {root: None}
    order = [root]
    q = deque([root])
    while q:
        u = q.popleft()
        for v in shape.adj[u]:
            if v not in parent:
                parent[v] = u
                order.append(v)
                q.append(v)
    return parent, order


def ascii_art(shape: Shape, marks=None) -> str:
    """Text picture, north up: ``o`` per node, ``-`` and ``|`` per edge.

    ``marks`` maps node ids to a replacement character.
    """
    marks = marks or {}
    xs = [p[0] for p in shape.pos.values()]
    ys = [p[1] for p in shape.pos.values()]
    x0, y0 = min(xs), min(ys)
    w, h = 2 * (max(xs) - x0) + 1, 2 * (max(ys) - y0) + 1
    rows = [[" "] * w for _ in range(h)]
    for u, (x, y) in shape.pos.items():
        rows[2 * (y - y0)][2 * (x - x0)] = marks.get(u, "o")
    for a, b in shape.edges():
        (xa, ya), (xb, yb) = shape.pos[a], shape.pos[b]
        rows[(ya - y0) + (yb - y0)][(xa - x0) + (xb - x0)] = "-" if ya == yb else "|"
    return "\n".join("".join(r).rstrip() for r in reversed(rows))
