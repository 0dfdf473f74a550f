import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridshrink.errors import CapacityError, EmptyCandidateSet, MPrimeTooLarge, Overflow
from gridshrink.grid import Horizontal, Shape, Vertical
from gridshrink.instances import gen_random_blob, gen_random_tree
from gridshrink.primitives import (
    C_BITS,
    StoredValue,
    coin_toss_failure_rate,
    coin_toss_leader,
    elect_from_set,
    iterate_elections,
    line_parity,
    nodes_needed,
    pasc_all_references,
    pasc_length,
    pasc_mark_first,
    pasc_parity,
    pasc_run,
    preprocessing_oracle,
    resolve_tosses,
    segment_arith,
    spatial_pasc,
    transfer_value,
)

from helpers import hpath


def test_pasc_offsets_around_middle_reference():
    res = pasc_run(7, 3)
    assert res.values().tolist() == [-3, -2, -1, 0, 1, 2, 3]
    assert res.rounds == 2 * res.iterations


def test_pasc_single_node():
    res = pasc_run(1, 0)
    assert res.values().tolist() == [0]
    assert res.iterations == 1


def test_pasc_rejects_outside_reference():
    with pytest.raises(ValueError):
        pasc_run(4, 4)


@given(st.integers(1, 70), st.data())
def test_pasc_backends_agree(m, data):
    r = data.draw(st.integers(0, m - 1))
    fast = pasc_run(m, r)
    slow = pasc_run(m, r, backend="circuit")
    assert np.array_equal(fast.bits, slow.bits)
    assert (fast.values() == np.arange(m) - r).all()
    # iteration count is logarithmic in the farthest distance
    far = max(r, m - 1 - r)
    assert fast.iterations <= max(1, far).bit_length() + 2


def test_all_references_matrix():
    vals, _ = pasc_all_references(5)
    assert (vals == np.arange(5)[None, :] - np.arange(5)[:, None]).all()


def test_parity_is_first_bit():
    for m, r in [(6, 0), (9, 4)]:
        assert (pasc_parity(m, r) == pasc_run(m, r).bits[0]).all()


@pytest.mark.parametrize("m", [1, 2, 3, 7, 64, 100, 255, 256])
def test_length_stored_in_segment(m):
    val, rounds = pasc_length(m)
    assert val.value == m
    assert val.nodes == m
    assert rounds <= 2 * (math.ceil(math.log2(m)) + 2) + 1 + m.bit_length()


@pytest.mark.parametrize("m,mp", [(8, 3), (8, 0), (8, 8), (1, 1), (13, 7)])
def test_mark_first(m, mp):
    marks, _ = pasc_mark_first(m, mp)
    assert marks.tolist() == [j < mp for j in range(m)]


def test_mark_first_too_many():
    with pytest.raises(MPrimeTooLarge):
        pasc_mark_first(4, 5)


def test_stored_value_layout():
    v = StoredValue.from_int(0b1011, 2)
    assert v.node_bits(0) == [1, 1] and v.node_bits(1) == [0, 1]
    assert v.value == 11
    assert nodes_needed(11) == 2 and nodes_needed(0) == 1


def test_transfer_zero_and_small_values():
    dest, cleared, rounds = transfer_value(StoredValue.from_int(0, 1), 1)
    assert dest.value == 0 and rounds == 1
    dest, cleared, rounds = transfer_value(StoredValue.from_int(0b1011, 2), 2)
    assert dest.value == 11 and cleared.value == 0 and rounds == 4


def test_transfer_needs_room():
    with pytest.raises(CapacityError):
        transfer_value(StoredValue.from_int(0b11111, 3), 2)
    with pytest.raises(CapacityError):
        StoredValue.from_int(16, 2)


def test_arith_examples():
    a, b = StoredValue.from_int(5, 4), StoredValue.from_int(3, 4)
    assert segment_arith("add", a, b)[0].value == 8
    assert segment_arith("sub", a, b)[0].value == 2
    assert segment_arith("cmp", StoredValue.from_int(7, 2), StoredValue.from_int(7, 2))[0] == 0
    assert segment_arith("mul", StoredValue.from_int(13, 4), StoredValue.from_int(11, 4))[0].value == 143
    assert segment_arith("div", StoredValue.from_int(143, 4), StoredValue.from_int(11, 4))[0].value == 13


def test_arith_errors():
    with pytest.raises(Overflow):
        segment_arith("sub", StoredValue.from_int(3, 2), StoredValue.from_int(5, 2))
    with pytest.raises(Overflow):
        segment_arith("add", StoredValue.from_int(15, 2), StoredValue.from_int(1, 2))
    with pytest.raises(ZeroDivisionError):
        segment_arith("div", StoredValue.from_int(3, 2), StoredValue.from_int(0, 2))


@given(st.integers(0, 255), st.integers(0, 255))
def test_arith_matches_python_ints(x, y):
    nodes = 16 // C_BITS
    a, b = StoredValue.from_int(x, nodes), StoredValue.from_int(y, nodes)
    assert segment_arith("add", a, b)[0].value == x + y
    assert segment_arith("cmp", a, b)[0] == (x > y) - (x < y)
    assert segment_arith("mul", a, b)[0].value == x * y
    if x >= y:
        assert segment_arith("sub", a, b)[0].value == x - y
    if y:
        assert segment_arith("div", a, b)[0].value == x // y


def test_spatial_reference_sees_itself_at_zero():
    s = hpath(3)
    res = spatial_pasc(s, 0)
    assert res.dx.tolist() == [0, 1, 2] and res.dy.tolist() == [0, 0, 0]
    pos = res.position(0)
    assert pos.horizontal is Horizontal.ZERO and pos.vertical is Vertical.ZERO
    # the reference lies west of the other nodes
    assert res.position(2).horizontal is Horizontal.WEST


@given(st.integers(1, 60), st.integers(0, 1000), st.booleans(), st.data())
def test_spatial_matches_coordinates(n, seed, blob, data):
    shape = gen_random_blob(n, seed) if blob else gen_random_tree(n, 6, seed)
    ref = data.draw(st.sampled_from(sorted(shape.pos)))
    fast = spatial_pasc(shape, ref)
    slow = spatial_pasc(shape, ref, backend="circuit")
    rx, ry = shape.pos[ref]
    for k, u in enumerate(fast.ids):
        assert fast.dx[k] == shape.pos[u][0] - rx == slow.dx[k]
        assert fast.dy[k] == shape.pos[u][1] - ry == slow.dy[k]


def test_line_parity():
    assert line_parity([0, 1, 2, 5], 2).tolist() == [0, 1, 0, 1]


def test_toss_resolution():
    assert resolve_tosses(True, False) == 0
    assert resolve_tosses(False, True) == 1
    assert resolve_tosses(True, True) is None
    assert resolve_tosses(False, False) is None


def test_toss_leader_terminates():
    winner, it = coin_toss_leader(np.random.default_rng(0))
    assert winner in (0, 1) and it >= 1
    winner, it = coin_toss_leader(np.random.default_rng(0), max_iterations=0)
    assert winner is None


def test_failure_rate_near_half():
    assert abs(coin_toss_failure_rate(20_000, seed=1) - 0.5) < 0.02


def test_election():
    assert elect_from_set([7]) == (7, 1)
    s = Shape.from_points([(2, 0), (0, 1), (1, 0)], [(0, 2)], anchor=0)
    assert elect_from_set([0, 1, 2], s)[0] == 2
    assert iterate_elections([3, 1, 2]) == [1, 2, 3]
    with pytest.raises(EmptyCandidateSet):
        elect_from_set([])


def test_preprocessing_charge():
    assert preprocessing_oracle(Shape.from_points([(0, 0)], anchor=0)).rounds == 0
    big = gen_random_tree(1024, 16, 0)
    assert preprocessing_oracle(big).rounds == 30
    assert preprocessing_oracle(big, leader=False, compass=False).rounds == 10
    assert preprocessing_oracle(big, c0=2.0, leader=False, compass=False).rounds == 20
