import math

import pytest
from hypothesis import given, strategies as st

from gridshrink.errors import CollisionError, IndexOutOfRange, InfeasibleParameters, KTooLarge, KTooSmall
from gridshrink.grid import (
    classify_nodes,
    dump_shape,
    equivalence_check,
    load_shape,
    same_up_to_translation,
    turning_points,
)
from gridshrink.instances import (
    check_spiral_recurrences,
    gen_log_spiral_pair,
    gen_random_blob,
    gen_random_tree,
    gen_spiral_pair,
    measure_sequential_rounds,
    run_in_order,
    shrink_red_segment,
    spiral_clearance,
    spiral_tables,
    sweeps_needed,
    check_premature_shrink,
)


def _table_n(k, pad=0):
    _, black, red = spiral_tables(k, pad)
    return 1 + sum(v - 1 for v in black.values()) + sum(v - 1 for v in red.values())


def _log_pad(k):
    return int(math.exp(k) // k)


# -- random shapes ------------------------------------------------------------


def test_single_node_tree():
    t = gen_random_tree(1, 4, 0)
    assert t.n == 1


def test_tree_is_deterministic():
    a, b = gen_random_tree(100, 8, 7), gen_random_tree(100, 8, 7)
    assert a.pos == b.pos and a.adj == b.adj


def test_tree_respects_turning_point_budget():
    t = gen_random_tree(100, 8, 7)
    assert t.n == 100 and t.is_tree()
    tps = [u for u, c in classify_nodes(t).items() if c.is_turning_point]
    assert len(tps) <= 8


def test_infeasible_tree_parameters():
    with pytest.raises(InfeasibleParameters):
        gen_random_tree(0, 4, 0)
    with pytest.raises(InfeasibleParameters):
        gen_random_tree(5, 1, 0)


@given(st.integers(1, 200), st.integers(2, 20), st.integers(0, 10_000))
def test_trees_pass_validation(n, k, seed):
    t = gen_random_tree(n, k, seed)
    back = load_shape(dump_shape(t))
    assert back.n == n and back.is_tree()
    assert len(turning_points(t)) <= max(k, 1)


@given(st.integers(1, 200), st.integers(0, 10_000))
def test_blobs_pass_validation(n, seed):
    b = gen_random_blob(n, seed)
    assert load_shape(dump_shape(b)).n == n


# -- spiral tables ------------------------------------------------------------


def test_k4_tables():
    green, black, red = spiral_tables(4)
    assert tuple(green.values()) == (2, 2, 3)
    assert tuple(black.values()) == (6, 3, 4, 2)
    assert tuple(red.values()) == (4, 1, 3)


@pytest.mark.parametrize("k", range(4, 49))
def test_recurrences_hold(k):
    assert check_spiral_recurrences(k, *spiral_tables(k))


def test_recurrence_check_catches_a_change():
    green, black, red = spiral_tables(10)
    black[3] += 1
    assert not check_spiral_recurrences(10, green, black, red)


def test_middle_red_segments_are_linear_in_k():
    # minimum over the middle third divided by k, frozen from the tables
    ratios = []
    for k in (12, 24, 48):
        _, _, red = spiral_tables(k)
        ratios.append(min(red[i] for i in range(k // 3, 2 * k // 3)) / k)
    assert all(r >= 1.0 for r in ratios)


def test_size_grows_cubically():
    ratios = [gen_spiral_pair(k).n / gen_spiral_pair(k // 2).n for k in (16, 24, 32, 48)]
    assert ratios == sorted(ratios)
    assert all(7.0 < r < 8.0 for r in ratios)


# -- spiral embeddings --------------------------------------------------------


@pytest.mark.parametrize("k", [5, 6, 8, 11, 16, 24])
def test_embedding_is_a_self_avoiding_path(k):
    pair = gen_spiral_pair(k)
    s = pair.t_initial
    assert len(set(s.pos.values())) == s.n
    assert s.is_tree() and max(s.degree(u) for u in s.pos) <= 2
    assert equivalence_check(pair.t_initial, pair.t_final)["geometric"]


@pytest.mark.parametrize("k", [8, 12, 16, 24])
def test_clearances(k):
    pair = gen_spiral_pair(k)
    for i in range(3, k - 3):
        assert spiral_clearance(pair, i) == pair.green[i - 2]


def test_spiral_k_limits():
    with pytest.raises(KTooSmall):
        gen_spiral_pair(3)
    with pytest.raises(KTooLarge):
        gen_spiral_pair(49)
    with pytest.raises(KTooLarge):
        gen_log_spiral_pair(15)


def test_k4_has_tables_only():
    pair = gen_spiral_pair(4)
    assert pair.t_initial is None and pair.schedule == []
    assert measure_sequential_rounds(pair) == 0


# -- padded spirals -----------------------------------------------------------


def test_k6_padding():
    pad = _log_pad(6)
    assert pad == 67
    g0, b0, r0 = spiral_tables(6)
    pair = gen_log_spiral_pair(6)
    for i in b0:
        assert pair.black[i] - b0[i] == (pad if i % 2 == 1 else 0)
    for i in r0:
        assert pair.red[i] - r0[i] == (pad if i % 2 == 1 else 0)
    assert pair.green == g0
    assert equivalence_check(pair.t_initial, pair.t_final)["geometric"]


def test_padded_size_grows_by_e_per_step():
    # odd and even k pad different numbers of segments, so single steps
    # alternate around e; n(5)/n(4) = 143/69 from the census
    assert (_table_n(4, _log_pad(4)), _table_n(5, _log_pad(5))) == (69, 143)
    step = (_table_n(14, _log_pad(14)) / _table_n(4, _log_pad(4))) ** (1 / 10)
    assert abs(step - math.e) / math.e < 0.05
    assert gen_log_spiral_pair(5).n == 143


# -- shrink order ----------------------------------------------------------------


def test_premature_shrink_collides_k8_i4():
    v = check_premature_shrink(gen_spiral_pair(8), 4)
    assert v.premature_collision and v.in_order_ok
    assert v.clearance == v.expected_clearance == 2


def test_premature_shrink_of_second_segment():
    pair = gen_spiral_pair(8)
    with pytest.raises(CollisionError) as exc:
        shrink_red_segment(pair.t_initial, pair, 2, max_sweeps=1)
    lab = pair.labels
    outer_red = set(range(lab["r2"], lab["r1"] + 1))
    black = set(range(0, lab["b9"] + 1))
    for r in exc.value.reports:
        a, b = r.witnesses
        assert {a, b} & outer_red and {a, b} & black
    assert check_premature_shrink(pair, 2).premature_collision


def test_premature_shrink_index_range():
    pair = gen_spiral_pair(8)
    with pytest.raises(IndexOutOfRange):
        check_premature_shrink(pair, 1)
    with pytest.raises(IndexOutOfRange):
        check_premature_shrink(pair, 6)


def test_in_order_schedule_reaches_final_path():
    pair = gen_spiral_pair(10)
    shape, per = run_in_order(pair)
    assert same_up_to_translation(shape, pair.t_final)
    assert sum(per.values()) == measure_sequential_rounds(pair)


@pytest.mark.parametrize("k", [5, 8, 12])
def test_simulated_rounds_match_arithmetic(k):
    pair = gen_spiral_pair(k)
    assert measure_sequential_rounds(pair) == measure_sequential_rounds(pair, simulate=False)
    assert measure_sequential_rounds(pair) == sum(sweeps_needed(pair.red[i], pair.green[i]) for i in pair.schedule)


def test_sweeps_needed_small_cases():
    assert sweeps_needed(2, 2) == 0
    assert sweeps_needed(5, 3) == 1
    assert sweeps_needed(13, 2) == 4
