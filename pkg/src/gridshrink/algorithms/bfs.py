"""Leaf-inward tree shrinking: segments next to leaves halve themselves into
their turning point until a single node remains."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..grid import DIRECTIONS, Shape, extract_segments
from ..errors import NotATree
from ..ops import Operation
from ..primitives import coin_toss_leader, pasc_parity, preprocessing_oracle
from .run import AlgorithmRun, Recorder

DETECTION_ROUNDS = 2


class SegmentStatus(str, Enum):
    INACTIVE = "inactive"  # no endpoint is a leaf
    LEAF = "leaf"  # one endpoint is a leaf: shrink toward the other
    FINAL = "final"  # both endpoints are leaves


@dataclass
class DetectedSegment:
    nodes: list  # ordered from the reference turning point to the far end
    status: SegmentStatus


def segment_detection(shape: Shape, segments=None, rec: Recorder | None = None):
    """Classify segments by how many endpoint leaves beep on the two circuits.

    Each leaf beeps on both lane circuits of its segment; a turning point
    with degree one is a leaf.  A segment hearing exactly one beep orients
    itself toward the silent endpoint, which becomes its reference.
    """
    if segments is None:
        segments = extract_segments(shape, check=False)
    out = []
    for seg in segments:
        a, b = seg.endpoints
        la, lb = shape.degree(a) <= 1, shape.degree(b) <= 1
        if la and lb:
            out.append(DetectedSegment(list(seg.nodes), SegmentStatus.FINAL))
        elif la or lb:
            nodes = list(seg.nodes) if lb else list(reversed(seg.nodes))
            out.append(DetectedSegment(nodes, SegmentStatus.LEAF))
        else:
            out.append(DetectedSegment(list(seg.nodes), SegmentStatus.INACTIVE))
    if rec is not None:
        for d in out:
            if d.status is not SegmentStatus.INACTIVE:
                rec.set_states(d.nodes, seg=1)
        rec.comm(DETECTION_ROUNDS, beeps=sum(d.status is not SegmentStatus.INACTIVE for d in out))
    return out


@dataclass
class ShrinkLog:
    lengths: list = field(default_factory=list)  # per segment: node count before each sweep
    sweeps: int = 0


def _sweep_ops(shape, chains):
    """Even nodes absorb their odd successor; returns ops grouped by direction."""
    groups = {d: [] for d in DIRECTIONS}
    for nodes in chains:
        if len(nodes) < 2:
            continue
        parity = pasc_parity(len(nodes), 0)
        for j in range(0, len(nodes) - 1, 2):
            # parity[j] == 0 marks the absorbing (even) node
            if parity[j] == 0:
                op = Operation.shrink(shape, nodes[j], nodes[j + 1])
                groups[op.direction].append(op)
    return groups


def segment_color_shrink(rec: Recorder, chains, log: ShrinkLog | None = None) -> ShrinkLog:
    """Halve every chain (reference first) into its reference concurrently.

    One sweep: a PASC iteration from the reference hands out parities, then
    one operation round per direction that has work, then a done beep.
    """
    log = log or ShrinkLog()
    chains = [list(c) for c in chains]
    if not log.lengths:
        log.lengths = [[len(c)] for c in chains]
    while any(len(c) > 1 for c in chains):
        for c in chains:
            if len(c) > 1:
                par = pasc_parity(len(c), 0)
                for j, u in enumerate(c):
                    rec.set_state(u, parity=int(par[j]))
        rec.comm(1)
        groups = _sweep_ops(rec.shape, chains)
        for d in DIRECTIONS:
            if groups[d]:
                rec.apply(groups[d])
        chains = [c[0::2] for c in chains]
        for c, hist in zip(chains, log.lengths):
            if hist[-1] > 1:
                hist.append(len(c))
        for c in chains:
            for u in c:
                rec.clear_state(u, "parity")
        rec.comm(1)
        log.sweeps += 1
    return log


@dataclass
class FinalShrink:
    iterations: int
    sweeps: int
    lengths: list


def final_segment_shrink(rec: Recorder, nodes, rng: np.random.Generator, max_iterations=None) -> FinalShrink:
    """Coin-toss between the two leaves, then halve into the loser."""
    if len(nodes) <= 1:
        return FinalShrink(0, 0, [len(nodes)])
    winner, iterations = coin_toss_leader(rng, max_iterations)
    rec.comm(iterations)
    if winner is None:
        winner = 0
    # the elected leaf leads; the other leaf acts as the reference
    chain = list(reversed(nodes)) if winner == 0 else list(nodes)
    rec.set_state(chain[0], ref=1)
    log = segment_color_shrink(rec, [chain])
    return FinalShrink(iterations, log.sweeps, log.lengths[0])


def bfs_shrinking(shape: Shape, seed: int = 0, c0: float = 1.0, budget: int = 64, strict: bool = True,
                  keep_traces: bool = True, snapshots: bool = False, rng: np.random.Generator | None = None) -> AlgorithmRun:
    if not shape.is_tree():
        raise NotATree("bfs_shrinking needs a tree")
    pre = preprocessing_oracle(shape, leader=False, compass=False, chirality=True, c0=c0)
    run = AlgorithmRun("bfs", shape, {"seed": seed}, preprocessing_rounds=pre.rounds)
    rec = Recorder(shape, budget=budget, strict=strict, keep_traces=keep_traces, snapshots=snapshots)
    rng = rng if rng is not None else np.random.default_rng(seed)
    phases = 0
    sweeps = 0
    election = 0
    while rec.shape.n > 1:
        detected = segment_detection(rec.shape, rec=rec)
        final = [d for d in detected if d.status is SegmentStatus.FINAL]
        if final:
            fs = final_segment_shrink(rec, final[0].nodes, rng)
            election += fs.iterations
            sweeps += fs.sweeps
            phases += 1
            break
        chains = [d.nodes for d in detected if d.status is SegmentStatus.LEAF]
        log = segment_color_shrink(rec, chains)
        sweeps += log.sweeps
        phases += 1
        # segments that hung off a finished turning point re-detect next phase
        for d in detected:
            rec.clear_state(d.nodes[0], "seg")
    rec.finish(run)
    run.stats.update(phases=phases, sweeps=sweeps, election_iterations=election)
    return run


def sweep_lengths(length: int) -> list[int]:
    """Node counts before each sweep and after the last one."""
    out = [length]
    while out[-1] > 1:
        out.append(math.ceil(out[-1] / 2))
    return out
