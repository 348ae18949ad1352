"""Independent reference implementations used as test oracles.

Written directly from the bound formulas over plain lists; nothing here calls
into ``msmrsched.dca`` or ``msmrsched.opt``.
"""

from __future__ import annotations

import itertools
import random

from msmrsched.model import JobSet, Pipeline, make_jobset


def shared_stages(js: JobSet, i: int, k: int) -> list[bool]:
    a, b = js.jobs[i], js.jobs[k]
    return [a.mapping[j] == b.mapping[j] and a.proc[j] > 0 and b.proc[j] > 0
            for j in range(js.num_stages)]


def segments(js: JobSet, i: int, k: int) -> tuple[int, int]:
    """(u, v): runs of shared stages of length one and of length two or more."""
    flags = shared_stages(js, i, k)
    runs = [len(list(g)) for key, g in itertools.groupby(flags) if key]
    return sum(r == 1 for r in runs), sum(r >= 2 for r in runs)


def shared_times(js: JobSet, i: int, k: int) -> list[int]:
    return [p if s else 0 for p, s in zip(js.jobs[k].proc, shared_stages(js, i, k))]


def _largest(values, x: int) -> int:
    return sum(sorted(values, reverse=True)[:x])


def _window_overlap(js: JobSet, i: int, k: int) -> bool:
    a, b = js.jobs[i], js.jobs[k]
    return b.arrival <= a.arrival + a.deadline and a.arrival <= b.arrival + b.deadline


def ref_bound(js: JobSet, i: int, higher, lower, mode: str) -> int:
    """Reference bound. ``mode`` is eq1..eq6 or edge; sets get the window filter here."""
    N = js.num_stages
    higher = [k for k in higher if k != i and _window_overlap(js, i, k)]
    lower = [k for k in lower if k != i and _window_overlap(js, i, k)]
    P = [list(j.proc) for j in js.jobs]
    t_i1 = max(P[i])
    if mode in ("eq1", "eq2"):
        total = t_i1
        for k in higher:
            late = js.jobs[k].arrival > js.jobs[i].arrival
            total += _largest(P[k], 2 if late else 1)
        for j in range(N - 1):
            total += max(P[q][j] for q in [i] + higher)
        if mode == "eq2":
            for j in range(N):
                total += max([P[l][j] for l in lower], default=0)
        return total

    def sh(k):
        return P[i] if k == i else shared_times(js, i, k)

    total = 0
    if mode == "eq3":
        total += 2 * t_i1
        for k in higher:
            u, v = segments(js, i, k)
            total += 2 * (u + v) * max(sh(k))
    elif mode in ("eq4", "eq5"):
        total += t_i1
        for k in higher:
            u, v = segments(js, i, k)
            total += (u + v) * max(sh(k))
    else:
        total += t_i1
        for k in higher:
            u, v = segments(js, i, k)
            total += _largest([p for p in sh(k) if p > 0], u + 2 * v)
    last = 2 if mode == "edge" else N - 1
    for j in range(last):
        total += max(sh(q)[j] for q in [i] + higher)
    if mode == "eq4":
        for j in range(N):
            total += max([sh(l)[j] for l in lower], default=0)
    elif mode == "eq5":
        others = [k for k in range(js.n) if k != i and _window_overlap(js, i, k)]
        for j in range(N):
            total += max([sh(l)[j] for l in others], default=0)
    elif mode == "edge":
        total += max([sh(l)[2] for l in lower], default=0)
    return total


def bounds_apply(js: JobSet, bounds) -> bool:
    """Bounds are guaranteed when every job meets its deadline or no window filtering happens.

    Dropping jobs whose release windows do not overlap is only safe when every
    job leaves the pipeline by its deadline.
    """
    if all(b.total <= js.jobs[b.job].deadline for b in bounds):
        return True
    return all(_window_overlap(js, i, k) for i in range(js.n) for k in range(i + 1, js.n))


def random_jobset(rng: random.Random, n: int, N: int, pool: int = 2, pmax: int = 20,
                  zero_prob: float = 0.1, arrivals: bool = True, dmax: int | None = None
                  ) -> JobSet:
    proc = [[0 if rng.random() < zero_prob else rng.randint(1, pmax) for _ in range(N)]
            for _ in range(n)]
    for p in proc:
        if not any(p):
            p[rng.randrange(N)] = rng.randint(1, pmax)
    names = [[f"s{j}r{y}" for y in range(pool)] for j in range(N)]
    mapping = [[rng.choice(names[j]) for j in range(N)] for _ in range(n)]
    arr = [rng.randint(0, 3 * pmax) if arrivals else 0 for _ in range(n)]
    hi = dmax if dmax is not None else pmax * N * n
    deadlines = [rng.randint(max(1, sum(p)), max(1, sum(p), hi)) for p in proc]
    pipe = Pipeline(tuple(tuple(names[j]) for j in range(N)))
    return make_jobset(proc, deadlines, mapping, arr, pipe)


def competing_pairs(js: JobSet) -> list[tuple[int, int]]:
    return [(i, k) for i in range(js.n) for k in range(i + 1, js.n)
            if any(js.jobs[i].mapping[j] == js.jobs[k].mapping[j] for j in range(js.num_stages))]


def brute_force_pairwise(js: JobSet, mode: str) -> bool:
    """Some orientation of every competing pair meets every deadline."""
    pairs = competing_pairs(js)
    partners = {i: [] for i in range(js.n)}
    for idx, (a, b) in enumerate(pairs):
        partners[a].append((b, idx, True))
        partners[b].append((a, idx, False))
    memo: dict[tuple[int, tuple[int, ...]], bool] = {}

    def fits(i: int, higher: tuple[int, ...]) -> bool:
        key = (i, higher)
        if key not in memo:
            lower = [k for k, _, _ in partners[i] if k not in higher]
            memo[key] = ref_bound(js, i, higher, lower, mode) <= js.jobs[i].deadline
        return memo[key]

    for bits in itertools.product((0, 1), repeat=len(pairs)):
        ok = True
        for i in range(js.n):
            # bit 1 means the lower id of the pair wins
            higher = tuple(k for k, idx, i_is_first in partners[i]
                           if bits[idx] == (0 if i_is_first else 1))
            if not fits(i, higher):
                ok = False
                break
        if ok:
            return True
    return False


def brute_force_ordering(js: JobSet, feasible_at) -> bool:
    """Some total ordering satisfies ``feasible_at(i, higher, lower)`` for every job."""
    for perm in itertools.permutations(range(js.n)):
        if all(feasible_at(i, perm[:pos], perm[pos + 1:]) for pos, i in enumerate(perm)):
            return True
    return False
