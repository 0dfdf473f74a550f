"""Reconfigurable circuits: pins, partition sets, circuit resolution and beeps.

Every edge carries ``C_PINS`` links.  A node labels the pins of each incident
edge 1..c in its own chirality; across an edge, label i meets label c-i+1
when both endpoints share a chirality and label i otherwise.  A node groups
its pins into partition sets and circuits are the connected components of
partition sets joined by links.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .errors import PinCoverageError
from .grid import DIRECTIONS, Shape, sub

C_PINS = 2


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, items=()):
        self.parent = {}
        self.size = {}
        for x in items:
            self.add(x)

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass(frozen=True)
class Orientation:
    """A node's private compass and handedness.

    ``rotation`` counts quarter turns between the node's local north and the
    global north; ``clockwise`` is the node's chirality.
    """

    rotation: int = 0
    clockwise: bool = True

    def to_global(self, local_index: int) -> tuple[int, int]:
        k = local_index if self.clockwise else -local_index
        return DIRECTIONS[(self.rotation + k) % 4]

    def to_local(self, direction) -> int:
        g = DIRECTIONS.index(direction)
        k = (g - self.rotation) % 4
        return k if self.clockwise else (-k) % 4


ALIGNED = Orientation()


# A pin is (local direction index, label) seen from its owner.
Pin = tuple[int, int]
PartitionSetId = tuple[int, int]  # (node id, index of the set in the node's configuration)


def local_pins(shape: Shape, u, orientation: Orientation = ALIGNED) -> list[Pin]:
    p = shape.pos[u]
    pins = []
    for v in shape.adj[u]:
        k = orientation.to_local(sub(shape.pos[v], p))
        pins.extend((k, label) for label in range(1, C_PINS + 1))
    return sorted(pins)


def link_partner_label(label: int, same_chirality: bool) -> int:
    return C_PINS - label + 1 if same_chirality else label


@dataclass
class CircuitLayout:
    circuit_of: dict[PartitionSetId, int]
    num_circuits: int

    def members(self, circuit: int) -> list[PartitionSetId]:
        return [ps for ps, c in self.circuit_of.items() if c == circuit]


def resolve_circuits(shape: Shape, configs, orientations=None) -> CircuitLayout:
    """Connected components of the partition-set graph.

    ``configs[u]`` is a sequence of partition sets, each an iterable of local
    pins ``(direction index, label)``.  ``orientations[u]`` defaults to the
    aligned compass.
    """
    orientations = orientations or {}
    owner: dict[tuple[int, Pin], PartitionSetId] = {}
    uf = UnionFind()
    for u in shape.pos:
        for idx, pset in enumerate(configs.get(u, ())):
            ps = (u, idx)
            uf.add(ps)
            for pin in pset:
                owner[(u, tuple(pin))] = ps
    for u, v in shape.edges():
        ou = orientations.get(u, ALIGNED)
        ov = orientations.get(v, ALIGNED)
        du = ou.to_local(sub(shape.pos[v], shape.pos[u]))
        dv = ov.to_local(sub(shape.pos[u], shape.pos[v]))
        same = ou.clockwise == ov.clockwise
        for label in range(1, C_PINS + 1):
            a = owner.get((u, (du, label)))
            b = owner.get((v, (dv, link_partner_label(label, same))))
            if a is None or b is None:
                missing = (u, du, label) if a is None else (v, dv, link_partner_label(label, same))
                raise PinCoverageError(f"pin {missing[1:]} of node {missing[0]} is in no partition set")
            uf.union(a, b)
    ids: dict = {}
    circuit_of = {}
    for ps in sorted(uf.parent):
        root = uf.find(ps)
        if root not in ids:
            ids[root] = len(ids)
        circuit_of[ps] = ids[root]
    return CircuitLayout(circuit_of, len(ids))


@dataclass
class BeepFrame:
    sent: set[PartitionSetId] = field(default_factory=set)
    received: set[PartitionSetId] = field(default_factory=set)

    def got(self, ps: PartitionSetId) -> bool:
        return ps in self.received


def deliver_beeps(layout: CircuitLayout, sends) -> BeepFrame:
    sends = set(sends)
    for ps in sends:
        if ps not in layout.circuit_of:
            raise KeyError(f"partition set {ps} is not part of the layout")
    hot = {layout.circuit_of[ps] for ps in sends}
    received = {ps for ps, c in layout.circuit_of.items() if c in hot}
    return BeepFrame(sends, received)


def circuits_by_bfs(shape: Shape, configs, orientations=None) -> dict[PartitionSetId, frozenset]:
    """Independent oracle: explicit partition-set graph explored breadth first.

    Returns, for each partition set, the frozenset of partition sets on its
    circuit.
    """
    orientations = orientations or {}
    graph = defaultdict(set)
    sets = {}
    for u in shape.pos:
        for idx, pset in enumerate(configs.get(u, ())):
            sets[(u, idx)] = {tuple(p) for p in pset}
            graph[(u, idx)]
    for (u, idx), pins in sets.items():
        ou = orientations.get(u, ALIGNED)
        for v in shape.adj[u]:
            ov = orientations.get(v, ALIGNED)
            du = ou.to_local(sub(shape.pos[v], shape.pos[u]))
            dv = ov.to_local(sub(shape.pos[u], shape.pos[v]))
            same = ou.clockwise == ov.clockwise
            for label in range(1, C_PINS + 1):
                if (du, label) not in pins:
                    continue
                want = (dv, link_partner_label(label, same))
                for jdx, other in enumerate(configs.get(v, ())):
                    if want in {tuple(p) for p in other}:
                        graph[(u, idx)].add((v, jdx))
                        graph[(v, jdx)].add((u, idx))
    comp = {}
    for start in graph:
        if start in comp:
            continue
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for x in frontier:
                for y in graph[x]:
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        fs = frozenset(seen)
        for x in seen:
            comp[x] = fs
    return comp


def single_set_config(shape: Shape, u, orientation: Orientation = ALIGNED):
    """All pins of ``u`` joined into one partition set."""
    return [local_pins(shape, u, orientation)]
