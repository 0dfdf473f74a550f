"""Synchronous round scheduler for anonymous node programs.

A node program is a callable ``program(view) -> Action``.  The view carries
only what the node can observe locally: its own state record, which of its
partition sets received a beep, the local directions of its incident edges
and a private random stream.  Node ids and coordinates stay in the world.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .circuits import ALIGNED, C_PINS, deliver_beeps, local_pins, resolve_circuits
from .errors import StateBudgetExceeded
from .grid import Shape, sub
from .ops import CollisionReport, Operation, apply_operations

DEFAULT_STATE_BUDGET = 64


def state_bits(value) -> int:
    """Serialized size of a node state record, in bits."""
    if value is None:
        return 0
    if isinstance(value, bool):
        return 1
    if isinstance(value, int):
        return max(1, abs(value).bit_length() + (value < 0))
    if isinstance(value, str):
        return 8 * len(value)
    if isinstance(value, dict):
        return sum(state_bits(v) for v in value.values())
    if isinstance(value, (tuple, list, frozenset, set)):
        return sum(state_bits(v) for v in value)
    raise TypeError(f"unsupported state value {value!r}")


def shape_digest(shape: Shape) -> str:
    h = hashlib.sha256()
    for u in sorted(shape.pos):
        h.update(f"{u}:{shape.pos[u][0]},{shape.pos[u][1]};".encode())
    for a, b in sorted(shape.edges()):
        h.update(f"{a}-{b};".encode())
    return h.hexdigest()[:16]


@dataclass
class RoundTrace:
    round: int
    ops: list = field(default_factory=list)
    beeps: int = 0
    digest: str = ""
    collisions: list = field(default_factory=list)
    max_state_bits: int = 0
    snapshot: dict | None = None  # {"pos": [[id, x, y], ...], "edges": [[a, b], ...]}

    def to_json(self) -> str:
        d = {
            "round": self.round,
            "ops": self.ops,
            "beeps": self.beeps,
            "digest": self.digest,
            "collisions": self.collisions,
            "max_state_bits": self.max_state_bits,
        }
        if self.snapshot is not None:
            d["snapshot"] = self.snapshot
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> RoundTrace:
        d = json.loads(line)
        return cls(d["round"], d["ops"], d["beeps"], d["digest"], d["collisions"], d["max_state_bits"],
                   d.get("snapshot"))


def snapshot_of(shape: Shape) -> dict:
    return {
        "pos": [[u, p[0], p[1]] for u, p in sorted(shape.pos.items())],
        "edges": sorted([a, b] for a, b in shape.edges()),
    }


def write_trace(traces, path):
    with open(path, "w") as fh:
        for t in traces:
            fh.write(t.to_json() + "\n")


def read_trace(path) -> list[RoundTrace]:
    with open(path) as fh:
        return [RoundTrace.from_json(line) for line in fh if line.strip()]


class NodeView:
    __slots__ = ("state", "received", "neighbors", "_seed")

    def __init__(self, state, received, neighbors, seed):
        self.state = state
        self.received = received
        self.neighbors = neighbors
        self._seed = seed

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self._seed)

    @property
    def degree(self) -> int:
        return len(self.neighbors)


@dataclass
class Action:
    state: dict
    partition: list | None = None  # list of partition sets of local pins
    beeps: tuple = ()  # indices into ``partition``
    op: tuple | None = None  # ("shrink", dir of the absorbed neighbor) or ("grow", dir)
    child_state: dict | None = None


class World:
    """Single-owner simulation state; rounds are applied sequentially."""

    def __init__(self, shape: Shape, program, init_state=None, seed=0, orientations=None,
                 strict=True, budget=DEFAULT_STATE_BUDGET, anchor=None):
        self.shape = shape
        self.program = program
        self.seed = int(seed)
        self.orientations = dict(orientations or {})
        self.strict = strict
        self.budget = budget
        self.anchor = anchor if anchor is not None else (shape.anchor if shape.anchor is not None else min(shape.pos))
        self.states = {u: dict(init_state(u) if callable(init_state) else (init_state or {})) for u in shape.pos}
        self.received = {u: () for u in shape.pos}
        self.round = 0
        self.traces: list[RoundTrace] = []

    def _neighbors(self, u):
        o = self.orientations.get(u, ALIGNED)
        p = self.shape.pos[u]
        return tuple(sorted(o.to_local(sub(self.shape.pos[v], p)) for v in self.shape.adj[u]))

    def view(self, u) -> NodeView:
        return NodeView(dict(self.states[u]), self.received[u], self._neighbors(u), (self.seed, u, self.round))

    def step_round(self) -> RoundTrace:
        shape = self.shape
        actions = {u: self.program(self.view(u)) for u in sorted(shape.pos)}
        configs = {}
        sends = set()
        for u, act in actions.items():
            o = self.orientations.get(u, ALIGNED)
            if act.partition is None:
                configs[u] = [[pin] for pin in local_pins(shape, u, o)]
            else:
                configs[u] = [list(map(tuple, ps)) for ps in act.partition]
            for i in act.beeps:
                sends.add((u, i))
        layout = resolve_circuits(shape, configs, self.orientations)
        frame = deliver_beeps(layout, sends)
        ops = []
        for u, act in actions.items():
            if act.op is None:
                continue
            kind, k = act.op
            d = self.orientations.get(u, ALIGNED).to_global(k)
            if kind == "shrink":
                v = shape.at[(shape.pos[u][0] + d[0], shape.pos[u][1] + d[1])]
                ops.append(Operation.shrink(shape, u, v))
            else:
                ops.append(Operation.grow(shape, u, d))
        new_shape = apply_operations(shape, self.anchor, ops) if ops else shape
        before = set(shape.pos)
        states = {}
        received = {}
        max_bits = 0
        for u in new_shape.pos:
            if u in before:
                states[u] = actions[u].state
                received[u] = tuple((u, i) in frame.received for i in range(len(configs[u])))
            else:
                creator = next(v for v in new_shape.adj[u] if v in actions and actions[v].op and actions[v].op[0] == "grow")
                states[u] = dict(actions[creator].child_state or {})
                received[u] = ()
            bits = state_bits(states[u])
            if self.strict and bits > self.budget:
                raise StateBudgetExceeded(f"a node uses {bits} > {self.budget} state bits")
            max_bits = max(max_bits, bits)
        self.shape = new_shape
        self.anchor = new_shape.anchor if ops else self.anchor
        self.states = states
        self.received = received
        trace = RoundTrace(
            round=self.round,
            ops=[op.to_record() for op in ops],
            beeps=len(sends),
            digest=shape_digest(new_shape),
            collisions=[],
            max_state_bits=max_bits,
        )
        self.traces.append(trace)
        self.round += 1
        return trace

    def run(self, rounds: int):
        for _ in range(rounds):
            self.step_round()
        return self


def pins_toward(k: int):
    return [(k, label) for label in range(1, C_PINS + 1)]


__all__ = [
    "Action",
    "CollisionReport",
    "NodeView",
    "RoundTrace",
    "World",
    "read_trace",
    "shape_digest",
    "state_bits",
    "write_trace",
]
