import pytest
from hypothesis import given, strategies as st

from gridshrink.circuits import (
    Orientation,
    UnionFind,
    circuits_by_bfs,
    deliver_beeps,
    link_partner_label,
    local_pins,
    resolve_circuits,
    single_set_config,
)
from gridshrink.errors import PinCoverageError
from gridshrink.instances import gen_random_blob, gen_random_tree
from gridshrink.primitives import _chain_config

from helpers import hpath


def test_union_find_basics():
    uf = UnionFind(range(5))
    assert uf.union(0, 1) and uf.union(3, 4)
    assert not uf.union(1, 0)
    assert uf.find(0) == uf.find(1) != uf.find(3)


def test_full_merge_gives_one_circuit():
    s = hpath(3)
    layout = resolve_circuits(s, {u: single_set_config(s, u) for u in s.pos})
    assert layout.num_circuits == 1


def test_pasc_wiring_gives_two_circuits():
    m = 7
    s = hpath(m)
    configs = {j: _chain_config(j % 2 == 0, j > 0, j < m - 1) for j in range(m)}
    layout = resolve_circuits(s, configs)
    assert layout.num_circuits == 2
    # each node sits on both circuits, once per partition set
    for j in range(m):
        assert layout.circuit_of[(j, 0)] != layout.circuit_of[(j, 1)]


def test_label_pairing_by_chirality():
    assert [link_partner_label(i, True) for i in (1, 2)] == [2, 1]
    assert [link_partner_label(i, False) for i in (1, 2)] == [1, 2]


def test_opposite_chirality_matches_labels():
    s = hpath(2)
    orient = {0: Orientation(0, True), 1: Orientation(0, False)}
    # keep only label 1 in its own set on both sides
    configs = {u: [[p] for p in local_pins(s, u, orient[u])] for u in s.pos}
    layout = resolve_circuits(s, configs, orient)
    pins0 = local_pins(s, 0, orient[0])
    pins1 = local_pins(s, 1, orient[1])
    i0 = pins0.index((pins0[0][0], 1))
    i1 = pins1.index((pins1[0][0], 1))
    assert layout.circuit_of[(0, i0)] == layout.circuit_of[(1, i1)]


def test_missing_pin_is_reported():
    s = hpath(2)
    with pytest.raises(PinCoverageError):
        resolve_circuits(s, {0: [[(1, 1)]], 1: single_set_config(s, 1)})


def test_no_senders_no_receivers():
    s = hpath(4)
    layout = resolve_circuits(s, {u: single_set_config(s, u) for u in s.pos})
    assert not deliver_beeps(layout, set()).received


def test_two_senders_one_beep():
    s = hpath(4)
    layout = resolve_circuits(s, {u: single_set_config(s, u) for u in s.pos})
    frame = deliver_beeps(layout, {(0, 0), (3, 0)})
    assert all(frame.got((u, 0)) for u in s.pos)


def test_isolated_circuit_hears_nothing():
    m = 5
    s = hpath(m)
    layout = resolve_circuits(s, {j: _chain_config(False, j > 0, j < m - 1) for j in range(m)})
    frame = deliver_beeps(layout, {(0, 0)})
    assert all(frame.got((j, 0)) for j in range(m))
    assert not any(frame.got((j, 1)) for j in range(m))


def _random_configs(shape, orient, draw):
    configs = {}
    for u in shape.pos:
        pins = local_pins(shape, u, orient[u])
        labels = draw(st.lists(st.integers(0, 3), min_size=len(pins), max_size=len(pins)))
        sets = {}
        for p, k in zip(pins, labels):
            sets.setdefault(k, []).append(p)
        configs[u] = list(sets.values())
    return configs


@given(st.data(), st.integers(1, 40), st.integers(0, 1000), st.booleans())
def test_resolution_matches_bfs_oracle(data, n, seed, blob):
    shape = gen_random_blob(n, seed) if blob else gen_random_tree(n, 8, seed)
    orient = {
        u: Orientation(data.draw(st.integers(0, 3)), data.draw(st.booleans())) for u in shape.pos
    }
    configs = _random_configs(shape, orient, data.draw)
    layout = resolve_circuits(shape, configs, orient)
    oracle = circuits_by_bfs(shape, configs, orient)
    for ps, members in oracle.items():
        c = layout.circuit_of[ps]
        assert {q for q, d in layout.circuit_of.items() if d == c} == set(members)


@given(st.integers(0, 3), st.booleans())
def test_orientation_round_trip(rot, cw):
    o = Orientation(rot, cw)
    for k in range(4):
        assert o.to_local(o.to_global(k)) == k
