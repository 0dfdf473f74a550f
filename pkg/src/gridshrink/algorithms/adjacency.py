"""Reduction of an arbitrary connected shape in the adjacency model.

Columns and rows are halved alternately.  A spatial PASC iteration from the
easternmost (northernmost) line hands every line its distance parity; each
node of an odd line is absorbed by its neighbor in the even line east
(north) of it.  All edges across a contracted boundary are operation edges,
so whole lines merge and the rest of the shape follows rigidly.
"""
from __future__ import annotations

from ..errors import Disconnected
from ..grid import EAST, NORTH, GraphModel, Shape, adjacency_closure, is_connected
from ..ops import Operation
from ..primitives import line_parity, preprocessing_oracle
from .run import AlgorithmRun, Recorder


def _sweep(rec: Recorder, k: int):
    """Halve the lines along axis ``k`` (0 = columns); returns whether anything moved."""
    shape = rec.shape
    ids = list(shape.pos)
    coords = [shape.pos[u][k] for u in ids]
    ref = max(coords)
    parity = line_parity(coords, ref)
    for u, p in zip(ids, parity):
        rec.set_state(u, odd=int(p))
    rec.comm(1)
    d = EAST if k == 0 else NORTH
    at = shape.at
    ops = []
    for u, p in zip(ids, parity):
        if p:
            q = shape.pos[u]
            v = at.get((q[0] + d[0], q[1] + d[1]))
            if v is not None:
                ops.append(Operation.shrink(shape, v, u))
    if not ops:
        return False
    rec.apply(ops)
    return True


def shape_reduction_adjacency(shape: Shape, c0: float = 1.0, budget: int = 64, strict: bool = True,
                              keep_traces: bool = True, snapshots: bool = False) -> AlgorithmRun:
    if not is_connected(shape):
        raise Disconnected("the shape is not connected")
    if shape.model is not GraphModel.ADJACENCY:
        shape = shape.copy()
        shape.model = GraphModel.ADJACENCY
        shape = adjacency_closure(shape)
    pre = preprocessing_oracle(shape, leader=True, compass=True, chirality=True, c0=c0)
    run = AlgorithmRun("adjacency", shape, {}, preprocessing_rounds=pre.rounds)
    rec = Recorder(shape, budget=budget, strict=strict, keep_traces=keep_traces, snapshots=snapshots)
    counts = [(shape.columns(), shape.rows())]
    idle = 0
    k = 0
    while rec.shape.n > 1 and idle < 2:
        moved = _sweep(rec, k)
        idle = 0 if moved else idle + 1
        if moved:
            counts.append((rec.shape.columns(), rec.shape.rows()))
        k = 1 - k
    rec.finish(run)
    run.stats.update(counts=counts, columns=counts[0][0], rows=counts[0][1])
    return run
