"""Distributed building blocks: PASC, spatial PASC, stored values, coin tosses.

PASC wiring used throughout: every node owns a primary and a secondary
partition set, each holding one lane of the link to its predecessor and one
lane of the link to its successor.  A link is crossed (lane A on one side
meets lane B on the other) exactly when the endpoint farther east, or further
along the segment, is active.  The reference node is permanently active and
beeps on its primary set.  A node then receives on its secondary set iff an
odd number of active nodes lies in the half-open stretch between itself and
the reference, which is bit i of its signed offset in iteration i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import ALIGNED, deliver_beeps, resolve_circuits
from .errors import CapacityError, EmptyCandidateSet, MPrimeTooLarge, Overflow
from .grid import EAST, NORTH, SOUTH, WEST, Horizontal, RelativePosition, Shape, Vertical

C_BITS = 2  # value bits stored per node

# Local direction indices in the aligned compass.
_N, _E, _S, _W = 0, 1, 2, 3


def _lane(direction: int, lane: str) -> tuple[int, int]:
    # Lane A uses label 1 toward north/east and label 2 toward south/west, so
    # lane A meets lane A across every link under the shared-chirality pairing.
    if direction in (_N, _E):
        return (direction, 1 if lane == "A" else 2)
    return (direction, 2 if lane == "A" else 1)


# ---------------------------------------------------------------------------
# PASC on a chain


@dataclass
class PascResult:
    bits: np.ndarray  # shape (iterations, m); bits[i, j] is bit i of node j's offset
    iterations: int
    rounds: int

    def values(self) -> np.ndarray:
        """Reconstruct each node's signed offset from its bit stream (two's complement)."""
        return twos_complement_values(self.bits)


def twos_complement_values(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    t = bits.shape[0]
    weights = np.left_shift(np.int64(1), np.arange(t, dtype=np.int64))
    raw = (bits * weights[:, None]).sum(axis=0)
    return raw - (bits[-1] << t)


def _pasc_iterate(m: int, r) -> tuple[list[np.ndarray], int]:
    """Evolve active flags; ``r`` may be an int or an array of references (one row each)."""
    refs = np.atleast_1d(np.asarray(r, dtype=np.int64))
    active = np.ones((refs.size, m), dtype=bool)
    idx = np.arange(m)
    lo = np.minimum(idx[None, :], refs[:, None])
    hi = np.maximum(idx[None, :], refs[:, None])
    rows = np.arange(refs.size)[:, None]
    streams = []
    while True:
        # c[k] = number of active nodes with index < k
        c = np.zeros((refs.size, m + 1), dtype=np.int64)
        np.cumsum(active, axis=1, out=c[:, 1:])
        recv = ((c[rows, hi + 1] - c[rows, lo + 1]) & 1).astype(bool)
        streams.append(recv)
        changed = active & recv
        active &= ~recv
        if not changed.any():
            break
    return streams, len(streams)


def pasc_run(m: int, r: int, backend: str = "fast") -> PascResult:
    """Run PASC on a segment of ``m`` nodes with reference ``r``.

    Each iteration costs two rounds: the reference beep and a beep on a
    segment-wide circuit by every node that just turned passive; the run
    stops after the first iteration without such a beep.
    """
    if not 0 <= r < m:
        raise ValueError("reference outside the segment")
    if backend == "fast":
        streams, t = _pasc_iterate(m, r)
        bits = np.stack([s[0] for s in streams])
    elif backend == "circuit":
        bits, t = _pasc_circuit(m, r)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return PascResult(bits.astype(np.int8), t, 2 * t)


def pasc_all_references(m: int) -> tuple[np.ndarray, int]:
    """Offsets reconstructed for every reference at once; row r holds the run with reference r."""
    streams, t = _pasc_iterate(m, np.arange(m))
    bits = np.stack(streams).astype(np.int64)  # (t, r, j)
    weights = np.left_shift(np.int64(1), np.arange(t, dtype=np.int64))
    raw = np.tensordot(weights, bits, axes=(0, 0))
    return raw - (bits[-1] << t), t


def _chain_config(active: bool, has_pred: bool, has_succ: bool):
    primary, secondary = [], []
    if has_pred:
        primary.append(_lane(_W, "B" if active else "A"))
        secondary.append(_lane(_W, "A" if active else "B"))
    if has_succ:
        primary.append(_lane(_E, "A"))
        secondary.append(_lane(_E, "B"))
    return [primary, secondary]


def _pasc_circuit(m: int, r: int):
    shape = Shape.path([(j, 0) for j in range(m)])
    active = [True] * m
    streams = []
    while True:
        configs = {j: _chain_config(active[j] or j == r, j > 0, j < m - 1) for j in range(m)}
        layout = resolve_circuits(shape, configs)
        frame = deliver_beeps(layout, {(r, 0)})
        recv = [frame.got((j, 1)) for j in range(m)]
        streams.append(recv)
        changed = [j for j in range(m) if active[j] and recv[j]]
        for j in changed:
            active[j] = False
        # termination check on a segment-wide circuit
        everyone = {j: [[_lane(d, lane) for d in ((_W,) if j > 0 else ()) + ((_E,) if j < m - 1 else ()) for lane in "AB"]] for j in range(m)}
        check = deliver_beeps(resolve_circuits(shape, everyone), {(j, 0) for j in changed})
        if not check.got((r, 0)):
            break
    return np.array(streams, dtype=np.int8), len(streams)


def pasc_parity(m: int, r: int = 0) -> np.ndarray:
    """First PASC iteration only: parity of each node's distance to ``r`` (one round)."""
    idx = np.arange(m)
    return (np.abs(idx - r) & 1).astype(np.int8) if m else np.zeros(0, dtype=np.int8)


# ---------------------------------------------------------------------------
# Stored values


@dataclass
class StoredValue:
    """A non-negative integer spread over a segment, ``C_BITS`` bits per node, little-endian."""

    bits: list[int]
    nodes: int

    @classmethod
    def from_int(cls, x: int, nodes: int) -> StoredValue:
        if x < 0:
            raise ValueError("stored values are non-negative")
        b = max(1, x.bit_length())
        if b > C_BITS * nodes:
            raise CapacityError(f"{b} bits do not fit into {nodes} nodes")
        return cls([(x >> i) & 1 for i in range(C_BITS * nodes)], nodes)

    @property
    def value(self) -> int:
        return sum(bit << i for i, bit in enumerate(self.bits))

    @property
    def bit_length(self) -> int:
        return self.value.bit_length()

    def node_bits(self, k: int) -> list[int]:
        return self.bits[C_BITS * k : C_BITS * (k + 1)]


def nodes_needed(x: int) -> int:
    return max(1, math.ceil(max(1, x.bit_length()) / C_BITS))


def pasc_length(m: int) -> tuple[StoredValue, int]:
    """Length of an ``m``-node segment, stored in the segment itself.

    The last node reconstructs m - 1 and adds one; each bit is then moved to
    its storing node in one round.
    """
    res = pasc_run(m, 0)
    last = int(res.values()[-1]) if m else -1
    length = last + 1
    val = StoredValue.from_int(length, m)
    return val, res.rounds + 1 + length.bit_length()


def pasc_mark_first(m: int, m_prime: int) -> tuple[np.ndarray, int]:
    """Mark the first ``m_prime`` nodes of an ``m``-node segment.

    During PASC iteration i the holder of bit i of m' beeps it on a
    segment-wide circuit; every node feeds its own bit and the broadcast bit
    into a least-significant-first comparator for ``index < m'``.
    """
    if m_prime > m:
        raise MPrimeTooLarge(f"m'={m_prime} exceeds m={m}")
    if m_prime < 0:
        raise ValueError("m' must be non-negative")
    res = pasc_run(m, 0)
    t = max(res.iterations, m_prime.bit_length() + 1)
    less = np.zeros(m, dtype=bool)
    for i in range(t):
        mine = res.bits[i] if i < res.iterations else np.zeros(m, dtype=np.int8)
        theirs = (m_prime >> i) & 1
        less = np.where(mine != theirs, mine < theirs, less)
    extra = t - res.iterations
    return less, res.rounds + res.iterations + 3 * extra


def transfer_value(value: StoredValue, dest_nodes: int) -> tuple[StoredValue, StoredValue, int]:
    """Move ``value`` to a destination segment one bit per round.

    Returns (destination value, cleared source, rounds).
    """
    b = max(1, value.bit_length)
    if b > C_BITS * dest_nodes:
        raise CapacityError(f"{b} bits do not fit into {dest_nodes} nodes")
    dest = StoredValue(value.bits[:b] + [0] * (C_BITS * dest_nodes - b), dest_nodes)
    cleared = StoredValue([0] * len(value.bits), value.nodes)
    return dest, cleared, b


def _ripple_add(a: list[int], b: list[int], carry: int = 0) -> tuple[list[int], int]:
    # carry chain resolved on a circuit in O(1) rounds: nodes in propagate
    # position connect through, generate positions cut and beep
    out = []
    for x, y in zip(a, b):
        s = x ^ y ^ carry
        carry = (x & y) | (carry & (x ^ y))
        out.append(s)
    return out, carry


def segment_arith(op: str, a: StoredValue, b: StoredValue | None = None):
    """Arithmetic on co-located values; returns (result, rounds).

    ``add``/``sub`` return StoredValues, ``cmp`` returns -1/0/1, ``mul`` and
    ``div`` use shift-and-add and restoring division with one addition per
    bit.
    """
    width = len(a.bits)
    ab = list(a.bits)
    bb = list(b.bits[:width]) + [0] * (width - len(b.bits)) if b is not None else [0] * width
    if b is not None and b.value >> width:
        raise Overflow("operand wider than the segment")
    if op == "add":
        s, carry = _ripple_add(ab, bb)
        if carry:
            raise Overflow("sum exceeds segment capacity")
        return StoredValue(s, a.nodes), 2
    if op == "sub":
        s, carry = _ripple_add(ab, [1 - x for x in bb], 1)
        if not carry:
            raise Overflow("negative difference")
        return StoredValue(s, a.nodes), 2
    if op == "cmp":
        res = 0
        for x, y in zip(ab, bb):
            if x != y:
                res = 1 if x > y else -1
        return res, 2
    if op == "mul":
        acc = [0] * width
        rounds = 0
        shifted = list(ab)
        for i in range(width):
            if bb[i]:
                acc, carry = _ripple_add(acc, shifted)
                if carry:
                    raise Overflow("product exceeds segment capacity")
            if i < width - 1:
                if shifted[-1] and any(bb[i + 1 :]):
                    raise Overflow("product exceeds segment capacity")
                shifted = [0] + shifted[:-1]
            rounds += 2
        return StoredValue(acc, a.nodes), rounds
    if op == "div":
        if b is None or b.value == 0:
            raise ZeroDivisionError("division by zero")
        rem = [0] * (width + 1)
        quot = [0] * width
        div = bb + [0]
        neg_div = [1 - x for x in div]
        rounds = 0
        for i in reversed(range(width)):
            rem = [ab[i]] + rem[:-1]
            trial, carry = _ripple_add(rem, neg_div, 1)
            if carry:
                rem = trial
                quot[i] = 1
            rounds += 3
        return StoredValue(quot, a.nodes), rounds
    raise ValueError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# Spatial PASC


@dataclass
class SpatialResult:
    dx: np.ndarray  # signed column offset of each node relative to the reference
    dy: np.ndarray
    ids: list
    rounds: int

    def position(self, u) -> RelativePosition:
        """Where the reference lies as seen from ``u``."""
        k = self.ids.index(u) if not hasattr(self, "_index") else self._index[u]
        return _sign_position(int(self.dx[k]), int(self.dy[k]))

    def positions(self) -> dict:
        return {u: _sign_position(int(x), int(y)) for u, x, y in zip(self.ids, self.dx, self.dy)}


def _sign_position(dx: int, dy: int) -> RelativePosition:
    # dx = x_u - x_ref, so the reference is east of u when dx < 0
    h = Horizontal.EAST if dx < 0 else Horizontal.WEST if dx > 0 else Horizontal.ZERO
    v = Vertical.NORTH if dy < 0 else Vertical.SOUTH if dy > 0 else Vertical.ZERO
    return RelativePosition(h, v)


def _spatial_config(shape: Shape, u, col_active: bool, row_active: bool, axis: int):
    """Partition sets for one spatial PASC instance along ``axis`` (0 = columns)."""
    p = shape.pos[u]
    dirs = set()
    for v in shape.adj[u]:
        q = shape.pos[v]
        d = (q[0] - p[0], q[1] - p[1])
        dirs.add({NORTH: _N, EAST: _E, SOUTH: _S, WEST: _W}[d])
    primary, secondary = [], []
    active = col_active if axis == 0 else row_active
    back = _W if axis == 0 else _S
    for d in sorted(dirs):
        if d == back and active:
            primary.append(_lane(d, "B"))
            secondary.append(_lane(d, "A"))
        else:
            primary.append(_lane(d, "A"))
            secondary.append(_lane(d, "B"))
    return [primary, secondary]


def _spatial_axis_circuit(shape: Shape, ref, axis: int):
    ids = sorted(shape.pos)
    coord = {u: shape.pos[u][axis] for u in ids}
    lines = sorted(set(coord.values()))
    active = {c: True for c in lines}
    rc = coord[ref]
    streams = []
    while True:
        configs = {u: _spatial_config(shape, u, active[coord[u]] or coord[u] == rc, active[coord[u]] or coord[u] == rc, axis) for u in ids}
        frame = deliver_beeps(resolve_circuits(shape, configs), {(ref, 0)})
        recv = {u: frame.got((u, 1)) for u in ids}
        streams.append([recv[u] for u in ids])
        changed = False
        for c in lines:
            if active[c] and c != rc:
                # every node of a column receives the same bit; any member decides
                member = next(u for u in ids if coord[u] == c)
                if recv[member]:
                    active[c] = False
                    changed = True
        if not changed:
            break
    bits = np.array(streams, dtype=np.int64)
    return twos_complement_values(bits), len(streams)


def _spatial_axis_fast(shape: Shape, ref, axis: int):
    ids = sorted(shape.pos)
    coord = np.array([shape.pos[u][axis] for u in ids], dtype=np.int64)
    lo = coord.min()
    m = int(coord.max() - lo + 1)
    r = int(shape.pos[ref][axis] - lo)
    streams, t = _pasc_iterate(m, r)
    line_bits = np.stack([s[0] for s in streams]).astype(np.int64)
    return twos_complement_values(line_bits)[coord - lo], t


def spatial_pasc(shape: Shape, ref, backend: str = "fast") -> SpatialResult:
    """Each node's signed horizontal and vertical offset from ``ref``.

    Horizontal links are crossed iff the column of the east endpoint is
    active and vertical links are straight, so the received parity only
    depends on the columns between a node and the reference.  Rows are
    handled symmetrically.  Both instances take two rounds per iteration.
    """
    if backend == "fast":
        dx, tx = _spatial_axis_fast(shape, ref, 0)
        dy, ty = _spatial_axis_fast(shape, ref, 1)
    elif backend == "circuit":
        dx, tx = _spatial_axis_circuit(shape, ref, 0)
        dy, ty = _spatial_axis_circuit(shape, ref, 1)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    res = SpatialResult(dx, dy, sorted(shape.pos), 2 * (tx + ty))
    res._index = {u: k for k, u in enumerate(res.ids)}
    return res


def line_parity(coords, ref_coord) -> np.ndarray:
    """First spatial PASC iteration along one axis: parity of each line's distance."""
    return (np.abs(np.asarray(coords) - ref_coord) & 1).astype(np.int8)


# ---------------------------------------------------------------------------
# Symmetry breaking


def coin_toss_round(rng: np.random.Generator) -> tuple[bool, bool]:
    return bool(rng.integers(2)), bool(rng.integers(2))


def resolve_tosses(first_heads: bool, second_heads: bool) -> int | None:
    """0 or 1 for the elected candidate, None on a tie (both or neither beeped)."""
    if first_heads == second_heads:
        return None
    return 0 if first_heads else 1


def coin_toss_leader(rng: np.random.Generator, max_iterations: int | None = None) -> tuple[int | None, int]:
    """Repeat fair tosses until exactly one candidate gets heads.

    Returns (winner, iterations); one round per iteration.
    """
    it = 0
    while max_iterations is None or it < max_iterations:
        it += 1
        winner = resolve_tosses(*coin_toss_round(rng))
        if winner is not None:
            return winner, it
    return None, it


def coin_toss_failure_rate(trials: int, seed: int = 0) -> float:
    """Fraction of single iterations that elect nobody."""
    rng = np.random.default_rng(seed)
    tosses = rng.integers(0, 2, size=(trials, 2))
    return float(np.mean(tosses[:, 0] == tosses[:, 1]))


def elect_from_set(candidates, shape: Shape | None = None, leader=None):
    """One-round election of a single member of ``candidates``.

    Stands in for the cited leader-assisted primitive: the choice is a fixed
    function of the wiring, here the candidate that is lowest, then
    westernmost.  Returns (chosen, rounds).
    """
    candidates = list(candidates)
    if not candidates:
        raise EmptyCandidateSet("no candidates")
    if shape is None:
        return min(candidates), 1
    return min(candidates, key=lambda u: (shape.pos[u][1], shape.pos[u][0])), 1


def iterate_elections(candidates, shape: Shape | None = None):
    """Elect every candidate once, in election order."""
    remaining = set(candidates)
    order = []
    while remaining:
        u, _ = elect_from_set(remaining, shape)
        order.append(u)
        remaining.discard(u)
    return order


# ---------------------------------------------------------------------------
# Preprocessing


@dataclass
class Preprocessing:
    leader: object
    orientations: dict
    chirality_aligned: bool
    compass_aligned: bool
    rounds: int
    services: tuple = field(default_factory=tuple)


def preprocessing_oracle(shape: Shape, leader=True, compass=True, chirality=True, c0: float = 1.0,
                         orientations=None, seed=None) -> Preprocessing:
    """Stand-in for leader election, compass alignment and chirality agreement.

    Charges ceil(c0 * log2 n) rounds per requested service and does not
    simulate the cited protocols.
    """
    n = shape.n
    per = math.ceil(c0 * math.log2(n)) if n > 1 else 0
    services = tuple(s for s, on in (("leader", leader), ("compass", compass), ("chirality", chirality)) if on)
    chosen = None
    if leader:
        if seed is None:
            chosen = min(shape.pos, key=lambda u: (shape.pos[u][1], shape.pos[u][0]))
        else:
            ids = sorted(shape.pos)
            chosen = ids[int(np.random.default_rng(seed).integers(len(ids)))]
    orient = dict(orientations or {})
    for u in shape.pos:
        o = orient.get(u, ALIGNED)
        rot = 0 if compass else o.rotation
        cw = True if chirality else o.clockwise
        orient[u] = type(o)(rot, cw)
    return Preprocessing(chosen, orient, chirality, compass, per * len(services), services)
