"""Round bookkeeping shared by the reconfiguration algorithms.

The algorithms are orchestrated centrally but every decision is a function
of what nodes observe through circuits: PASC bits, beeps and local degree.
The recorder charges communication rounds, applies operation rounds through
the collision-checked simulator, keeps per-node state records for the memory
audit, and logs one trace entry per round.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..engine import DEFAULT_STATE_BUDGET, RoundTrace, shape_digest, snapshot_of, state_bits
from ..errors import CollisionError, StateBudgetExceeded
from ..grid import DIRECTION_NAMES, Shape
from ..ops import apply_operations


@dataclass
class AlgorithmRun:
    algorithm: str
    initial: Shape
    params: dict
    final: Shape | None = None
    preprocessing_rounds: int = 0
    main_rounds: int = 0
    op_rounds: int = 0
    traces: list = field(default_factory=list)
    peak_state_bits: int = 0
    collisions: int = 0
    stats: dict = field(default_factory=dict)
    # positional op log: one tuple of (kind, actor position, direction) per op round
    signature: list = field(default_factory=list)

    @property
    def total_rounds(self) -> int:
        return self.preprocessing_rounds + self.main_rounds


class Recorder:
    def __init__(self, shape: Shape, anchor=None, budget=DEFAULT_STATE_BUDGET, strict=True,
                 keep_traces=True, digests=True, snapshots=False):
        self.shape = shape
        if anchor is None:
            anchor = shape.anchor if shape.anchor in shape.pos else min(shape.pos, key=lambda u: shape.pos[u][::-1])
        self.anchor = anchor
        self.budget = budget
        self.strict = strict
        self.keep_traces = keep_traces
        self.digests = digests
        self.snapshots = snapshots
        self.rounds = 0
        self.op_rounds = 0
        self.traces: list[RoundTrace] = []
        self.signature: list = []
        self.states: dict = {}
        self.peak_bits = 0
        self._digest = shape_digest(shape) if digests else ""
        self._dirty_bits = 0

    # -- state records ------------------------------------------------------

    def set_state(self, u, **fields):
        rec = self.states.setdefault(u, {})
        rec.update(fields)
        bits = state_bits(rec)
        if bits > self.peak_bits:
            self.peak_bits = bits
            if self.strict and bits > self.budget:
                raise StateBudgetExceeded(f"a node holds {bits} > {self.budget} state bits")
        self._dirty_bits = max(self._dirty_bits, bits)

    def set_states(self, nodes, **fields):
        for u in nodes:
            self.set_state(u, **fields)

    def clear_state(self, u, *keys):
        rec = self.states.get(u)
        if rec is None:
            return
        for k in keys or list(rec):
            rec.pop(k, None)

    # -- rounds -------------------------------------------------------------

    def _trace(self, ops=(), beeps=0):
        if self.keep_traces:
            snap = snapshot_of(self.shape) if self.snapshots and ops else None
            self.traces.append(RoundTrace(self.rounds, list(ops), beeps, self._digest, [], self._dirty_bits, snap))
        self._dirty_bits = 0
        self.rounds += 1

    def comm(self, rounds: int = 1, beeps: int = 0):
        """Charge ``rounds`` pure communication rounds."""
        for _ in range(int(rounds)):
            self._trace(beeps=beeps)

    def apply(self, ops):
        """One operation round; a collision is re-raised with the round index."""
        ops = list(ops)
        shape = self.shape
        try:
            new = apply_operations(shape, self.anchor, ops)
        except CollisionError as exc:
            raise CollisionError(exc.reports, self.rounds) from None
        sig = sorted((op.kind.value, shape.pos[op.actor], DIRECTION_NAMES[op.direction]) for op in ops)
        self.signature.append((self.rounds, tuple(sig)))
        for op in ops:
            if op.kind.value == "shrink":
                self.states.pop(op.target, None)
        self.shape = new
        self.anchor = new.anchor if ops else self.anchor
        if self.digests:
            self._digest = shape_digest(new)
        self._trace(ops=[op.to_record() for op in ops])
        self.op_rounds += 1
        return new

    def finish(self, run: AlgorithmRun) -> AlgorithmRun:
        run.final = self.shape
        run.main_rounds = self.rounds
        run.op_rounds = self.op_rounds
        run.traces = self.traces
        run.peak_state_bits = self.peak_bits
        run.signature = self.signature
        return run


def permuted_copy(shape: Shape, seed: int = 0) -> Shape:
    """Same shape with node ids relabelled by a random permutation."""
    ids = sorted(shape.pos)
    perm = np.random.default_rng(seed).permutation(len(ids))
    offset = max(ids) + 1
    relabel = {u: offset + int(perm[i]) for i, u in enumerate(ids)}
    out = Shape({relabel[u]: shape.pos[u] for u in ids},
                {relabel[u]: {relabel[v] for v in shape.adj[u]} for u in ids},
                anchor=relabel.get(shape.anchor), model=shape.model)
    return out


def anonymity_audit(algorithm, shape: Shape, seed: int = 0, **kwargs) -> bool:
    """Rerun ``algorithm`` on relabelled ids and compare positional op logs.

    ``algorithm(shape, **kwargs)`` must return an :class:`AlgorithmRun`; any
    decision that leaks node ids shows up as a diverging signature.
    """
    a = algorithm(shape, **kwargs)
    b = algorithm(permuted_copy(shape, seed), **kwargs)
    return a.signature == b.signature and a.main_rounds == b.main_rounds
