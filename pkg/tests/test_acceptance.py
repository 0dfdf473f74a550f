"""Exit criteria, each at its stated tolerance and time budget.

Every test prints one PASS/FAIL line; the terminal summary repeats them.
"""
import math
import time

import numpy as np
import pytest

from gridshrink.algorithms import (
    Recorder,
    anonymity_audit,
    bfs_shrinking,
    incompressible_tree,
    oracle_flags,
    segment_color_shrink,
    shape_reduction_adjacency,
    target_tree,
)
from gridshrink.errors import CapacityError, CollisionError
from gridshrink.grid import Shape, incompressible_form_oracle, same_up_to_translation, turning_points
from gridshrink.harness import MetricsRow, fit_bound
from gridshrink.instances import (
    check_spiral_recurrences,
    gen_log_spiral_pair,
    gen_random_blob,
    gen_random_tree,
    gen_spiral_pair,
    gen_target_pair,
    in_order_clean,
    measure_sequential_rounds,
    spiral_tables,
    check_premature_shrink,
)
from gridshrink.primitives import (
    coin_toss_failure_rate,
    coin_toss_leader,
    pasc_all_references,
    pasc_parity,
    pasc_run,
    spatial_pasc,
)

pytestmark = pytest.mark.acceptance

BUDGET_BITS = 64
# runs kept for the memory and anonymity audit of criterion 10
AUDITED = {}


def _row(algo, shape, run, seed):
    return MetricsRow(algo, shape.n, len(turning_points(shape)) if shape.is_tree() else 0, shape.columns(),
                      shape.rows(), seed, run.preprocessing_rounds, run.main_rounds, run.op_rounds,
                      run.peak_state_bits, run.collisions, 0.0)


def _audit(name, run):
    AUDITED.setdefault(name, []).append(run.peak_state_bits)


# 1 ---------------------------------------------------------------------------


def test_c1_pasc_offsets(report):
    t0 = time.perf_counter()
    bad = 0
    for m in range(1, 257):
        vals, _ = pasc_all_references(m)
        expect = np.arange(m)[None, :] - np.arange(m)[:, None]
        bad += int((vals != expect).sum())
    # second route: resolve the actual circuits for every reference of small segments
    # and for a spread of references on long ones
    for m in list(range(1, 25)) + [100, 255, 256]:
        refs = range(m) if m < 25 else (0, m // 3, m - 1)
        for r in refs:
            bad += int((pasc_run(m, r, backend="circuit").values() != np.arange(m) - r).sum())
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 10
    report(1, ok, f"PASC offsets for m <= 256, all references: {bad} mismatches", dt)
    assert ok


# 2 ---------------------------------------------------------------------------


def test_c2_spatial_pasc(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = 0
    for i in range(200):
        n = int(rng.integers(1, 501))
        shape = gen_random_blob(n, i) if i % 2 else gen_random_tree(n, 32, i)
        ids = sorted(shape.pos)
        refs = [ids[int(j)] for j in rng.integers(0, len(ids), size=3)]
        for ref in refs:
            res = spatial_pasc(shape, ref)
            rx, ry = shape.pos[ref]
            for k, u in enumerate(res.ids):
                x, y = shape.pos[u]
                bad += int(np.sign(res.dx[k]) != np.sign(x - rx)) + int(np.sign(res.dy[k]) != np.sign(y - ry))
        if i % 5 == 0:
            slow = spatial_pasc(shape, refs[0], backend="circuit")
            fast = spatial_pasc(shape, refs[0])
            bad += int((slow.dx != fast.dx).sum() + (slow.dy != fast.dy).sum())
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 30
    report(2, ok, f"spatial PASC signs on 200 shapes: {bad} mismatches", dt)
    assert ok


# 3 ---------------------------------------------------------------------------


def test_c3_bfs_shrinking(report):
    t0 = time.perf_counter()
    rows, failures, collisions = [], 0, 0
    for n in [2 ** e for e in range(6, 13)]:
        for seed in range(50):
            tree = gen_random_tree(n, 32, seed)
            run = bfs_shrinking(tree, seed=seed, budget=BUDGET_BITS, keep_traces=False)
            failures += run.final.n != 1
            collisions += run.collisions
            rows.append(_row("bfs", tree, run, seed))
            _audit("bfs", run)
    fit = fit_bound(rows, "k_logn")
    dt = time.perf_counter() - t0
    ok = failures == 0 and collisions == 0 and fit["residual"] < 0.25 and not fit["flagged"] and dt < 300
    report(3, ok, f"{len(rows)} runs, {failures} not single-node, k_logn a={fit['a']:.3f} "
                  f"b={fit['b']:.1f} residual={fit['residual']:.3f}", dt)
    assert ok


# 4 ---------------------------------------------------------------------------


def _halving_counts(length):
    """Node counts before each sweep, taken from the parity bits that pick survivors."""
    counts = [length]
    chain = np.arange(length)
    while chain.size > 1:
        chain = chain[pasc_parity(chain.size, 0) == 0]
        counts.append(int(chain.size))
    return counts


def _simulated_counts(length):
    rec = Recorder(Shape.path([(x, 0) for x in range(length)], anchor=0), anchor=0, keep_traces=False,
                   digests=False)
    return segment_color_shrink(rec, [list(range(length))]).lengths[0]


def _measured_halving():
    measured = {ell: _halving_counts(ell) for ell in range(1, 4097)}
    # the geometric simulation must agree wherever we can afford to run it
    sample = list(range(1, 200)) + [2 ** e + d for e in range(8, 13) for d in (-1, 0, 1) if 2 ** e + d <= 4096]
    agree = all(_simulated_counts(ell) == measured[ell] for ell in sample)
    return measured, agree


def test_halving_law_as_simulated():
    """Node counts follow ceil(l / 2^r); edge counts follow floor((l - 1) / 2^r)."""
    measured, agree = _measured_halving()
    assert agree
    for ell, counts in measured.items():
        assert counts == [math.ceil(ell / 2 ** r) for r in range(len(counts))]
        assert [c - 1 for c in counts] == [(ell - 1) // 2 ** r for r in range(len(counts))]
        assert len(counts) - 1 == math.ceil(math.log2(ell))


@pytest.mark.xfail(strict=True, reason="the stated law ⌊ℓ/2^r⌋ contradicts ⌈log₂ℓ⌉ sweeps for ℓ not a power of two; "
                                       "see the decision ledger")
def test_c4_segment_halving(report):
    t0 = time.perf_counter()
    measured, agree = _measured_halving()
    len_bad = [ell for ell, c in measured.items() if c != [ell // 2 ** r for r in range(len(c))]]
    cnt_bad = [ell for ell, c in measured.items() if len(c) - 1 != math.ceil(math.log2(ell))]
    dt = time.perf_counter() - t0
    ok = agree and not len_bad and not cnt_bad and dt < 10
    report(4, ok, f"l <= 4096: {len(len_bad)} lengths off floor(l/2^r) (first {len_bad[:3]}), "
                  f"{len(cnt_bad)} sweep counts off ceil(log2 l)", dt)
    assert ok


# 5 ---------------------------------------------------------------------------


def test_c5_incompressible(report):
    t0 = time.perf_counter()
    wrong, rows = 0, []
    sizes = [64, 128, 256, 512, 1024]
    for j in range(200):
        n = sizes[j % 5]
        tree = gen_random_tree(n, 16, j)
        expect = incompressible_form_oracle(tree)
        run = incompressible_tree(tree, budget=BUDGET_BITS, keep_traces=False)
        wrong += not same_up_to_translation(run.final, expect)
        _audit("incompressible", run)
        known = incompressible_tree(tree, known_flags=oracle_flags(tree), budget=BUDGET_BITS, keep_traces=False)
        wrong += not same_up_to_translation(known.final, expect)
        rows.append(_row("incompressible-known", tree, known, j))
        _audit("incompressible-known", known)
    fit = fit_bound(rows, "logn")
    dt = time.perf_counter() - t0
    ok = wrong == 0 and fit["residual"] < 0.25 and not fit["flagged"] and dt < 180
    report(5, ok, f"200 trees, {wrong} outputs differ from the oracle; known flags logn "
                  f"a={fit['a']:.2f} residual={fit['residual']:.3f}", dt)
    assert ok


# 6 ---------------------------------------------------------------------------


def test_c6_target_tree(report):
    t0 = time.perf_counter()
    wrong, capacity, collisions, worst = 0, 0, 0, 0.0
    for j in range(100):
        n = [32, 64, 128, 256, 512][j % 5]
        pair = gen_target_pair(n, 12, j)
        try:
            run = target_tree(pair.initial, pair.target_lengths, budget=BUDGET_BITS, keep_traces=False)
        except CapacityError:
            capacity += 1
            continue
        except CollisionError:
            collisions += 1
            continue
        wrong += not same_up_to_translation(run.final, pair.final)
        collisions += run.collisions
        worst = max(worst, run.stats["iterations"] / math.ceil(math.log2(n)))
        _audit("target", run)
    dt = time.perf_counter() - t0
    # a = 3: one growth and one shrink pass per halving plus the final partial step
    ok = wrong == capacity == collisions == 0 and worst <= 3 and dt < 300
    report(6, ok, f"100 pairs, {wrong} wrong, {capacity} capacity failures, {collisions} collisions, "
                  f"max iterations / ceil(log2 n) = {worst:.2f} (a = 3)", dt)
    assert ok


# 7 ---------------------------------------------------------------------------


def test_c7_adjacency(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    a, b = 3, 2  # b: the two idle parity rounds that confirm termination
    failures, worst = 0, 0.0
    for j in range(50):
        blob = gen_random_blob(int(rng.integers(2, 2001)), j)
        run = shape_reduction_adjacency(blob, budget=BUDGET_BITS, keep_traces=False)
        C, R = run.stats["columns"], run.stats["rows"]
        pred = math.ceil(math.log2(C)) + math.ceil(math.log2(R))
        failures += run.final.n != 1 or run.main_rounds > a * pred + b
        if pred:
            worst = max(worst, (run.main_rounds - b) / pred)
        _audit("adjacency", run)
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 120
    report(7, ok, f"50 blobs, {failures} over {a}*(ceil log C + ceil log R) + {b}; "
                  f"worst slope {worst:.2f}", dt)
    assert ok


# 8 ---------------------------------------------------------------------------


def test_c8_lower_bound_family(report):
    t0 = time.perf_counter()
    rec_ok, early_ok, order_ok = True, True, True
    ratios = {}
    for k in range(8, 25):
        rec_ok &= check_spiral_recurrences(k, *spiral_tables(k))
        pair = gen_spiral_pair(k)
        order_ok &= in_order_clean(pair)
        for i in range(2, k - 2):
            v = check_premature_shrink(pair, i)
            early_ok &= v.premature_collision
            if v.expected_clearance is not None:
                early_ok &= v.clearance == v.expected_clearance
        ratios[k] = measure_sequential_rounds(pair) / (k * math.log2(k))
    a = min(ratios.values())
    stable = max(ratios.values()) / a <= 2
    log_ratios = {}
    for k in range(6, 13):
        pair = gen_log_spiral_pair(k)
        log_ratios[k] = measure_sequential_rounds(pair) / math.log2(pair.n) ** 2
    a2 = min(log_ratios.values())
    dt = time.perf_counter() - t0
    ok = rec_ok and early_ok and order_ok and a > 0 and stable and a2 > 0 and dt < 300
    report(8, ok, f"recurrences {rec_ok}, premature shrinks collide {early_ok}, in-order clean {order_ok}; "
                  f"rounds >= {a:.3f} k log2 k (max/min {max(ratios.values()) / a:.2f}); "
                  f"padded rounds >= {a2:.3f} (log2 n)^2", dt)
    assert ok


# 9 ---------------------------------------------------------------------------


def test_c9_coin_toss(report):
    t0 = time.perf_counter()
    rate = coin_toss_failure_rate(100_000, seed=9)
    n = 1024
    limit = 3 * math.ceil(math.log2(n))
    wins = 0
    for seed in range(1000):
        winner, _ = coin_toss_leader(np.random.default_rng(seed), max_iterations=limit)
        wins += winner is not None
    # end to end: the final segment of a long path elects within the same limit
    elect = [bfs_shrinking(Shape.path([(x, 0) for x in range(n)], anchor=0), seed=s, keep_traces=False)
             .stats["election_iterations"] for s in range(20)]
    dt = time.perf_counter() - t0
    ok = abs(rate - 0.5) <= 0.02 and wins >= 1000 * (1 - 1 / n) and max(elect) <= limit and dt < 60
    report(9, ok, f"failure rate {rate:.4f}; {wins}/1000 elected within {limit} iterations; "
                  f"path n={n} max election iterations {max(elect)}", dt)
    assert ok


# 10 --------------------------------------------------------------------------


def test_c10_memory_and_anonymity(report):
    t0 = time.perf_counter()
    if not AUDITED:
        _small_audit_batch()
    over = {name: sum(b > BUDGET_BITS for b in bits) for name, bits in AUDITED.items()}
    covered = set(AUDITED) >= {"bfs", "incompressible", "incompressible-known", "target", "adjacency"}
    leaks = []
    for j in range(5):
        tree = gen_random_tree(256, 16, j)
        if not anonymity_audit(bfs_shrinking, tree, seed=j):
            leaks.append(("bfs", j))
        if not anonymity_audit(incompressible_tree, tree, seed=j):
            leaks.append(("incompressible", j))
        flags = oracle_flags(tree)
        if not anonymity_audit(lambda s, **kw: incompressible_tree(s, known_flags=_relabel_flags(tree, s, flags)),
                               tree, seed=j):
            leaks.append(("incompressible-known", j))
        pair = gen_target_pair(256, 12, j)
        if not anonymity_audit(lambda s, **kw: target_tree(s, pair.target_lengths), pair.initial, seed=j):
            leaks.append(("target", j))
        if not anonymity_audit(shape_reduction_adjacency, gen_random_blob(400, j), seed=j):
            leaks.append(("adjacency", j))
    dt = time.perf_counter() - t0
    ok = covered and not any(over.values()) and not leaks
    runs = sum(len(v) for v in AUDITED.values())
    report(10, ok, f"{runs} audited runs, over budget {over}; anonymity leaks {leaks}", dt)
    assert ok


def _small_audit_batch():
    # used when this criterion runs without the earlier ones
    for j in range(5):
        tree = gen_random_tree(200, 16, j)
        _audit("bfs", bfs_shrinking(tree, seed=j, strict=False, keep_traces=False))
        _audit("incompressible", incompressible_tree(tree, strict=False, keep_traces=False))
        _audit("incompressible-known", incompressible_tree(tree, known_flags=oracle_flags(tree), strict=False,
                                                           keep_traces=False))
        pair = gen_target_pair(200, 12, j)
        _audit("target", target_tree(pair.initial, pair.target_lengths, strict=False, keep_traces=False))
        _audit("adjacency", shape_reduction_adjacency(gen_random_blob(300, j), strict=False, keep_traces=False))


def _relabel_flags(original, shape, flags):
    """Carry per-node flags over to a relabelled copy by position."""
    by_pos = {original.pos[u]: f for u, f in flags.items()}
    return {u: by_pos[p] for u, p in shape.pos.items()}
