"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

from __future__ import annotations

import itertools
import random
import time
from functools import lru_cache

from msmrsched.assign import dm, dmr, opdca, sdca
from msmrsched.dca import BoundMode, EdgeFlags, bound_for, ordering_bounds
from msmrsched.experiment import METHODS, ExperimentSpec, acceptance_table, run_experiment, to_csv
from msmrsched.opt import solve_exact
from msmrsched.priorities import PairwiseAssignment, PriorityOrdering, pairwise_bounds
from msmrsched.sim import SimConfig, simulate
from msmrsched.workload import EdgeConfig

import oracles
from conftest import FIG2A_MAPPING, dmr_instance, example1, record

M = BoundMode


def test_criterion_01_example_exactness():
    js = example1()
    t0 = time.perf_counter()
    before = bound_for(js, 1, [0], [2, 3], M.NONPREEMPTIVE_SINGLE).total
    after = bound_for(js, 1, [0, 2], [3], M.NONPREEMPTIVE_SINGLE).total
    ms = (time.perf_counter() - t0) * 1000 / 2
    ok = before == 92 and after == 87 and ms < 1
    record(1, ok, f"non-preemptive single-resource bound {before} then {after} ({ms:.3f} ms each)")
    assert ok


def test_criterion_02_lowest_priority_bound():
    got = bound_for(example1(), 0, [1, 2, 3], [], M.PREEMPTIVE_SINGLE).total
    record(2, got == 82, f"preemptive single-resource bound of the lowest job = {got}")
    assert got == 82


def test_criterion_03_opdca_matches_exhaustive_orderings():
    rng = random.Random(303)
    t0 = time.perf_counter()
    agree = feasible = 0
    for trial in range(500):
        mode = (M.NONPREEMPTIVE_OPA, M.PREEMPTIVE_REFINED)[trial % 2]
        js = oracles.random_jobset(rng, rng.randint(3, 6), rng.randint(2, 4), pool=2,
                                   dmax=rng.choice([40, 70, 120, 200]))

        @lru_cache(maxsize=None)
        def fits(i, higher):
            lower = [k for k in range(js.n) if k != i and k not in higher]
            return sdca(js, i, higher, lower, mode)

        exhaustive = oracles.brute_force_ordering(
            js, lambda i, higher, lower: fits(i, frozenset(higher)))
        verdict = opdca(js, mode).feasible
        agree += verdict == exhaustive
        feasible += exhaustive
    secs = time.perf_counter() - t0
    ok = agree == 500 and secs < 60
    record(3, ok, f"{agree}/500 verdicts agree ({feasible} feasible), {secs:.1f} s")
    assert ok


def test_criterion_04_adjacent_swap_monotonicity():
    rng = random.Random(404)
    modes = (M.NONPREEMPTIVE_OPA, M.PREEMPTIVE_REFINED, M.EDGE_MIXED)
    bad = 0
    for trial in range(1000):
        mode = modes[trial % 3]
        N = 3 if mode is M.EDGE_MIXED else rng.randint(2, 4)
        js = oracles.random_jobset(rng, rng.randint(2, 6), N, pool=2,
                                   arrivals=mode is not M.EDGE_MIXED, dmax=rng.choice([60, 120]))
        order = list(range(js.n))
        rng.shuffle(order)
        p = rng.randrange(js.n - 1)
        swapped = order[:]
        swapped[p], swapped[p + 1] = swapped[p + 1], swapped[p]
        before = {b.job: b for b in ordering_bounds(js, order, mode)}
        after = {b.job: b for b in ordering_bounds(js, swapped, mode)}
        down, up = order[p], order[p + 1]

        def ok(b):
            return b.total <= js.jobs[b.job].deadline

        if ok(before[up]) and not ok(after[up]):
            bad += 1
        elif not ok(before[down]) and ok(after[down]):
            bad += 1
        elif after[up].total > before[up].total or after[down].total < before[down].total:
            bad += 1
        elif any(before[k] != after[k] for k in range(js.n) if k not in (up, down)):
            bad += 1
    record(4, bad == 0, f"1000 swap triples, {bad} monotonicity violations")
    assert bad == 0


def test_criterion_05_non_opa_witness():
    js = example1()
    fewer = bound_for(js, 1, [0], [2, 3], M.NONPREEMPTIVE_SINGLE).total
    more = bound_for(js, 1, [0, 2], [3], M.NONPREEMPTIVE_SINGLE).total
    # with D = 90 the job fits only after gaining a higher-priority job
    tight = example1((1000, 90, 1000, 1000))
    flips = (not sdca(tight, 1, [0], [2, 3], M.NONPREEMPTIVE_SINGLE)
             and sdca(tight, 1, [0, 2], [3], M.NONPREEMPTIVE_SINGLE))
    opa = (bound_for(js, 1, [0], [2, 3], M.NONPREEMPTIVE_OPA).total
           <= bound_for(js, 1, [0, 2], [3], M.NONPREEMPTIVE_OPA).total)
    ok = fewer == 92 and more == 87 and flips and opa
    record(5, ok, f"adding a higher-priority job lowers the bound {fewer} -> {more}; "
                  f"the OPA-compatible variant does not")
    assert ok


def test_criterion_06_exact_solver_matches_brute_force():
    rng = random.Random(606)
    modes = ((M.PREEMPTIVE_REFINED, "eq6"), (M.NONPREEMPTIVE_MULTI, "eq4"), (M.EDGE_MIXED, "edge"))
    t0 = time.perf_counter()
    agree = feasible = done = 0
    while done < 200:
        mode, name = modes[done % 3]
        N = 3 if mode is M.EDGE_MIXED else rng.randint(2, 4)
        js = oracles.random_jobset(rng, rng.randint(2, 6), N, pool=2,
                                   dmax=rng.choice([50, 90, 150]))
        if len(oracles.competing_pairs(js)) > 12:
            continue
        done += 1
        brute = oracles.brute_force_pairwise(js, name)
        agree += solve_exact(js, mode).feasible == brute
        feasible += brute
    secs = time.perf_counter() - t0
    ok = agree == 200 and secs < 120
    record(6, ok, f"{agree}/200 verdicts agree ({feasible} feasible), {secs:.1f} s")
    assert ok


def test_criterion_07_pairwise_beats_orderings():
    mode = M.PREEMPTIVE_REFINED
    deadlines = (60, 55, 55, 50)
    js = example1(deadlines, mapping=FIG2A_MAPPING)
    pinned = not opdca(js, mode).feasible and solve_exact(js, mode).feasible
    witness = PairwiseAssignment.from_list([[1, 0], [0, 2], [2, 1], [3, 1], [2, 3]])
    pinned = pinned and all(b.total <= js.jobs[b.job].deadline
                            for b in pairwise_bounds(js, witness, mode))
    found = 0
    for choice in itertools.product("ab", repeat=12):
        mapping = [tuple(choice[3 * i:3 * i + 3]) for i in range(4)]
        cand = example1(deadlines, mapping=mapping)
        if not opdca(cand, mode).feasible and solve_exact(cand, mode).feasible:
            found += 1
    ok = pinned and found > 0
    record(7, ok, f"pinned mapping separates: {pinned}; exhaustive search finds "
                  f"{found}/4096 witness mappings")
    assert ok


def test_criterion_08_simulator_soundness():
    rng = random.Random(808)
    modes = [(M.PREEMPTIVE_REFINED, (True,)), (M.PREEMPTIVE_MULTI, (True,)),
             (M.NONPREEMPTIVE_MULTI, (False,)), (M.NONPREEMPTIVE_OPA, (False,)),
             (M.PREEMPTIVE_SINGLE, (True,)), (M.NONPREEMPTIVE_SINGLE, (False,)),
             (M.EDGE_MIXED, None)]
    t0 = time.perf_counter()
    runs = violations = skipped = 0
    while runs < 1000:
        mode, flag = modes[runs % len(modes)]
        N = 3 if mode is M.EDGE_MIXED else rng.randint(1, 4)
        js = oracles.random_jobset(rng, rng.randint(1, 10), N,
                                   pool=1 if mode.single_resource else 2,
                                   arrivals=mode is not M.EDGE_MIXED)
        order = list(range(js.n))
        rng.shuffle(order)
        bounds = ordering_bounds(js, order, mode)
        if not oracles.bounds_apply(js, bounds):
            skipped += 1
            continue
        flags = EdgeFlags().preemptive() if flag is None else flag * N
        trace = simulate(js, PriorityOrdering.from_order(order), SimConfig(flags))
        violations += sum(d > b.total for d, b in zip(trace.delays(js), bounds))
        runs += 1
    secs = time.perf_counter() - t0
    ok = violations == 0 and secs < 120
    record(8, ok, f"{runs} runs, {violations} jobs above their bound, {secs:.1f} s "
                  f"({skipped} draws skipped: a late job with window-filtered interferers)")
    assert ok


def test_criterion_09_refinement_dominance():
    rng = random.Random(909)
    bad = 0
    for _ in range(1000):
        js = oracles.random_jobset(rng, rng.randint(1, 7), rng.randint(1, 5), pool=rng.randint(1, 3))
        order = list(range(js.n))
        rng.shuffle(order)
        b = {m: ordering_bounds(js, order, m) for m in
             (M.PREEMPTIVE_REFINED, M.PREEMPTIVE_MULTI, M.NONPREEMPTIVE_MULTI, M.NONPREEMPTIVE_OPA)}
        for i in range(js.n):
            bad += b[M.PREEMPTIVE_REFINED][i].total > b[M.PREEMPTIVE_MULTI][i].total
            bad += b[M.NONPREEMPTIVE_MULTI][i].total > b[M.NONPREEMPTIVE_OPA][i].total
    record(9, bad == 0, f"1000 instances, {bad} dominance violations")
    assert bad == 0


BETAS = ("0.05", "0.10", "0.15", "0.20", "0.25")


def test_criterion_10_scaled_trends():
    spec = ExperimentSpec("beta", BETAS, 200, METHODS,
                          base=EdgeConfig(num_aps=8, num_servers=6, num_jobs=30, seed=2024))
    t0 = time.perf_counter()
    rows = run_experiment(spec)
    secs = time.perf_counter() - t0
    print(to_csv(rows))
    ar = acceptance_table(rows)
    labels = [spec.label(p) for p in range(len(BETAS))]
    a = all(ar["OPT"][v] >= ar["OPDCA"][v] for v in labels)
    b = all(ar["DMR"][v] >= ar["DM"][v] for v in labels)
    dm_curve = [ar["DM"][v] for v in labels]
    c = all(x > y for x, y in zip(dm_curve, dm_curve[1:]))
    d = ar["DM"][labels[0]] >= 95
    fast = secs < 15 * 60
    curve = " ".join(f"{float(x):g}" for x in dm_curve)
    detail = (f"(a) {'PASS' if a else 'FAIL'} (b) {'PASS' if b else 'FAIL'} "
              f"(c) {'PASS' if c else 'FAIL'} (d) {'PASS' if d else 'FAIL'}; "
              f"AR_DM by beta: {curve}; {secs:.0f} s")
    record(10, a and b and c and d and fast, detail)
    assert a and b and d and fast
    assert c, f"AR_DM is not strictly decreasing across beta: {curve}"


def test_criterion_11_dmr_repair():
    js = dmr_instance()
    base = dm(js, M.PREEMPTIVE_REFINED)
    out = dmr(js, M.PREEMPTIVE_REFINED)
    got = (base.bounds[1].total, out.feasible, out.bounds[0].total, out.bounds[1].total)
    ok = not base.feasible and got[1:] == (True, 23, 41) and got[0] == 70
    record(11, ok, f"DM bound {got[0]} (infeasible); after repair {got[2]} and {got[3]}")
    assert ok
