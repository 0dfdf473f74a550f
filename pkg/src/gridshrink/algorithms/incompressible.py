"""Reduction of a tree to its incompressible form.

Compressible columns hold no turning point, so inside them the shape is a
set of horizontal segment interiors.  Each maximal run of compressible nodes
together with the incompressible node west of it halves into that node; all
runs between the same pair of incompressible columns have equal length and
equal parities, so whole columns vanish in lock step.  Rows follow.
"""
from __future__ import annotations

from collections import Counter

from ..errors import NotATree, VerificationFailure
from ..grid import Axis, Shape, compressibility, extract_segments, is_turning_point
from ..primitives import elect_from_set, preprocessing_oracle, spatial_pasc
from .bfs import segment_color_shrink
from .run import AlgorithmRun, Recorder


def oracle_flags(shape: Shape) -> dict:
    """Per-node (column incompressible, row incompressible) from the centralized map."""
    cmap = compressibility(shape)
    return {u: (not cmap.columns[p[0]], not cmap.rows[p[1]]) for u, p in shape.pos.items()}


def flags_from_marks(shape: Shape, marked) -> dict:
    """Expand a set of nodes lying in an incompressible column and row.

    Interior nodes of a horizontal segment always sit in an incompressible
    row, so their mark decides the column; vertical interiors likewise.
    """
    marked = set(marked)
    flags = {}
    for seg in extract_segments(shape, check=False):
        for u in seg.nodes[1:-1]:
            m = u in marked
            flags[u] = (m, True) if seg.axis is Axis.HORIZONTAL else (True, m)
    for u in shape.pos:
        if u not in flags:
            flags[u] = (True, True)  # turning points, or a lone node
    return flags


def compute_incompressible_nodes(shape: Shape, rec: Recorder | None = None) -> dict:
    """Per-node flags from one spatial PASC per turning point.

    The leader elects the turning points one at a time; a node that sees a
    zero horizontal (vertical) offset marks its column (row) incompressible.
    """
    if not shape.is_tree():
        raise NotATree("compute_incompressible_nodes needs a tree")
    tps = [u for u in shape.pos if is_turning_point(shape, u)]
    col = {u: False for u in shape.pos}
    row = {u: False for u in shape.pos}
    remaining = set(tps)
    while remaining:
        t, r = elect_from_set(remaining, shape)
        remaining.discard(t)
        res = spatial_pasc(shape, t)
        for u, dx, dy in zip(res.ids, res.dx, res.dy):
            if dx == 0:
                col[u] = True
            if dy == 0:
                row[u] = True
        if rec is not None:
            rec.comm(r + res.rounds + 1)
    if rec is not None:
        for u in shape.pos:
            rec.set_state(u, col=col[u], row=row[u])
    return {u: (col[u], row[u]) for u in shape.pos}


def _runs(shape, flags, axis):
    """Chains [p, c_1, ..., c_m]: compressible runs behind their incompressible node."""
    k = 0 if axis is Axis.HORIZONTAL else 1
    chains = []
    for seg in extract_segments(shape, check=False):
        if seg.axis is not axis:
            continue
        run = None
        for prev, u in zip(seg.nodes, seg.nodes[1:]):
            if not flags[u][k]:
                if run is None:
                    run = [prev]
                run.append(u)
            elif run is not None:
                chains.append(run)
                run = None
        if run is not None:
            chains.append(run)
    return chains


def _line_census(shape, flags, k):
    """Sizes of the incompressible lines along axis ``k``, in coordinate order."""
    count = Counter(shape.pos[u][k] for u in shape.pos if flags[u][k])
    return [count[c] for c in sorted(count)]


class _CensusRecorder(Recorder):
    """Recorder asserting that incompressible lines keep their members."""

    def __init__(self, *a, flags=None, **kw):
        super().__init__(*a, **kw)
        self.flags = flags
        self.watch = None
        self.census = None

    def apply(self, ops):
        new = super().apply(ops)
        if self.watch is not None:
            now = _line_census(new, self.flags, self.watch)
            if now != self.census:
                raise VerificationFailure("an incompressible line gained or lost nodes", self.rounds - 1)
        return new


def incompressible_tree(shape: Shape, known_flags: dict | None = None, c0: float = 1.0, budget: int = 64,
                        strict: bool = True, keep_traces: bool = True, snapshots: bool = False, check_invariant: bool = True) -> AlgorithmRun:
    if not shape.is_tree():
        raise NotATree("incompressible_tree needs a tree")
    known = known_flags is not None
    pre = preprocessing_oracle(shape, leader=True, compass=True, chirality=True, c0=c0)
    run = AlgorithmRun("incompressible-known" if known else "incompressible", shape, {"known_flags": known},
                       preprocessing_rounds=pre.rounds)
    rec = _CensusRecorder(shape, budget=budget, strict=strict, keep_traces=keep_traces, snapshots=snapshots)
    if known:
        flags = dict(known_flags)
        for u in shape.pos:
            rec.set_state(u, col=flags[u][0], row=flags[u][1])
    else:
        flags = compute_incompressible_nodes(shape, rec)
    rec.flags = flags
    sweeps = {}
    for axis, k in ((Axis.HORIZONTAL, 0), (Axis.VERTICAL, 1)):
        if shape.n > 1:
            chains = _runs(rec.shape, flags, axis)
            if check_invariant:
                rec.watch = k
                rec.census = _line_census(rec.shape, flags, k)
            log = segment_color_shrink(rec, chains)
            sweeps[axis.value] = log.sweeps
            rec.watch = None
    rec.finish(run)
    run.stats.update(sweeps=sweeps)
    return run
