"""Exact pairwise priority assignment and export of the equivalent 0-1 program.

The search is depth-first over the orientation of each competing pair. Every
job keeps an optimistic bound (undecided partners count neither as higher nor
as lower) and a pessimistic one (they count as both). A node is pruned when an
optimistic bound misses its deadline and accepted as soon as every
pessimistic bound fits, at which point any completion is a valid witness.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .assign import FEASIBLE, INFEASIBLE, UNKNOWN, AssignmentOutcome
from .dca import BoundMode, EdgeFlags
from .model import JobSet, competitor_sets
from .priorities import (
    OPTIMISTIC,
    PESSIMISTIC,
    PairwiseAssignment,
    check_pairwise_mode,
    pairwise_bound,
    pairwise_bounds,
)

__all__ = [
    "DEFAULT_BUDGET", "OPTIMISTIC", "PESSIMISTIC", "PairwiseAssignment", "pairwise_bound",
    "solve_exact", "LinearProgram", "build_program", "export_lp",
]

DEFAULT_BUDGET = 10**6


class BudgetExhausted(Exception):
    pass


def _stages(jobset: JobSet, mode: BoundMode) -> tuple[list[int], list[int]]:
    """Stages with a stage-additive term and stages with a lower-blocking term."""
    N = jobset.num_stages
    if mode is BoundMode.EDGE_MIXED:
        flags = EdgeFlags()
        blocking = [j for j, nonpre in ((1, not flags.compute_preemptive),
                                        (2, flags.download_nonpreemptive)) if nonpre]
        return [0, 1], blocking
    if mode is BoundMode.NONPREEMPTIVE_MULTI:
        return list(range(N - 1)), list(range(N))
    return list(range(N - 1)), []


def job_additive(jobset: JobSet, i: int, k: int, mode: BoundMode) -> int:
    prof = jobset.profile(i, k)
    if mode is BoundMode.NONPREEMPTIVE_MULTI:
        return prof.m * prof.top(1)
    return prof.top(prof.w)


class _Search:
    def __init__(self, jobset: JobSet, mode: BoundMode, budget: int):
        self.budget = budget
        self.nodes = 0
        n = self.n = jobset.n
        add_st, blk_st = _stages(jobset, mode)
        self.deadline = [job.deadline for job in jobset.jobs]
        self.base = [max(job.proc) for job in jobset.jobs]
        self.own = [[job.proc[j] for j in add_st] for job in jobset.jobs]
        self.nblk = len(blk_st)

        comp = competitor_sets(jobset)
        self.all_pairs = comp.pairs()
        # only pairs that can change a bound become search variables
        self.pairs: list[tuple[int, int]] = []
        for a, b in self.all_pairs:
            if jobset.overlaps(a, b) and jobset.profile(a, b).m > 0:
                self.pairs.append((a, b))
        self.jadd: list[dict[int, int]] = [{} for _ in range(n)]
        self.hp: list[dict[int, list[int]]] = [{} for _ in range(n)]
        self.bp: list[dict[int, list[int]]] = [{} for _ in range(n)]
        self.pairs_of: list[list[int]] = [[] for _ in range(n)]
        for p, (a, b) in enumerate(self.pairs):
            for i, k in ((a, b), (b, a)):
                shared = jobset.profile(i, k).shared_proc
                self.jadd[i][k] = job_additive(jobset, i, k, mode)
                self.hp[i][k] = [shared[j] for j in add_st]
                self.bp[i][k] = [shared[j] for j in blk_st]
                self.pairs_of[i].append(p)
        self.orient = [0] * len(self.pairs)  # +1: a > b, -1: b > a
        # optimistic state over decided partners
        self.jsum = [0] * n
        self.hmax = [list(o) for o in self.own]
        self.bmax = [[0] * self.nblk for _ in range(n)]
        self.trail: list[tuple] = []
        self.pess = [self._pessimistic(i) for i in range(n)]
        self.nbad = sum(self.pess[i] > self.deadline[i] for i in range(n))

    def opt(self, i: int) -> int:
        return self.base[i] + self.jsum[i] + sum(self.hmax[i]) + sum(self.bmax[i])

    def _relation(self, i: int, k: int, p: int) -> int:
        """+1 if k is higher than i, -1 if lower, 0 if undecided."""
        o = self.orient[p]
        if o == 0:
            return 0
        a = self.pairs[p][0]
        return o if k == a else -o

    def _pessimistic(self, i: int) -> int:
        total = self.base[i]
        hmax = list(self.own[i])
        bmax = [0] * self.nblk
        for p in self.pairs_of[i]:
            a, b = self.pairs[p]
            k = b if a == i else a
            rel = self._relation(i, k, p)
            if rel >= 0:
                total += self.jadd[i][k]
                for s, v in enumerate(self.hp[i][k]):
                    if v > hmax[s]:
                        hmax[s] = v
            if rel <= 0:
                for s, v in enumerate(self.bp[i][k]):
                    if v > bmax[s]:
                        bmax[s] = v
        return total + sum(hmax) + sum(bmax)

    def inc_higher(self, i: int, k: int) -> int:
        hm = self.hmax[i]
        return self.jadd[i][k] + sum(v - hm[s] for s, v in enumerate(self.hp[i][k]) if v > hm[s])

    def inc_lower(self, i: int, k: int) -> int:
        bm = self.bmax[i]
        return sum(v - bm[s] for s, v in enumerate(self.bp[i][k]) if v > bm[s])

    def slack_after(self, hi: int, lo: int) -> int:
        """Smaller remaining optimistic slack of the two jobs if ``hi`` beats ``lo``."""
        return min(self.deadline[lo] - self.opt(lo) - self.inc_higher(lo, hi),
                   self.deadline[hi] - self.opt(hi) - self.inc_lower(hi, lo))

    def _save(self, i: int) -> None:
        self.trail.append(("job", i, self.jsum[i], list(self.hmax[i]), list(self.bmax[i]),
                           self.pess[i]))

    def decide(self, p: int, hi: int) -> None:
        a, b = self.pairs[p]
        lo = b if hi == a else a
        self.trail.append(("pair", p))
        self._save(lo)
        self._save(hi)
        self.orient[p] = 1 if hi == a else -1
        # lo gains hi as a higher-priority job
        self.jsum[lo] += self.jadd[lo][hi]
        hm = self.hmax[lo]
        for s, v in enumerate(self.hp[lo][hi]):
            if v > hm[s]:
                hm[s] = v
        # hi may now be blocked by lo
        bm = self.bmax[hi]
        for s, v in enumerate(self.bp[hi][lo]):
            if v > bm[s]:
                bm[s] = v
        for i in (lo, hi):
            was_bad = self.pess[i] > self.deadline[i]
            self.pess[i] = self._pessimistic(i)
            self.nbad += (self.pess[i] > self.deadline[i]) - was_bad

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            entry = self.trail.pop()
            if entry[0] == "pair":
                self.orient[entry[1]] = 0
            else:
                _, i, jsum, hmax, bmax, pess = entry
                was_bad = self.pess[i] > self.deadline[i]
                self.jsum[i], self.hmax[i], self.bmax[i], self.pess[i] = jsum, hmax, bmax, pess
                self.nbad += (pess > self.deadline[i]) - was_bad

    def propagate(self, jobs: Iterable[int]) -> bool:
        """Force orientations whose alternative already breaks a deadline."""
        queue = list(jobs)
        queued = set(queue)
        while queue:
            x = queue.pop()
            queued.discard(x)
            if self.opt(x) > self.deadline[x]:
                return False
            for p in self.pairs_of[x]:
                if self.orient[p]:
                    continue
                a, b = self.pairs[p]
                a_wins = self.slack_after(a, b) >= 0
                b_wins = self.slack_after(b, a) >= 0
                if not a_wins and not b_wins:
                    return False
                if a_wins != b_wins:
                    self.decide(p, a if a_wins else b)
                    for i in (a, b):
                        if i not in queued:
                            queue.append(i)
                            queued.add(i)
        return True

    def pick(self) -> tuple[int, int, int] | None:
        """Undecided pair with the largest optimistic swing, and its preferred winner."""
        best = None
        best_key = None
        for p, (a, b) in enumerate(self.pairs):
            if self.orient[p]:
                continue
            swing = max(self.inc_higher(b, a), self.inc_lower(a, b),
                        self.inc_higher(a, b), self.inc_lower(b, a))
            key = (-swing, p)
            if best_key is None or key < best_key:
                best_key, best = key, p
        if best is None:
            return None
        a, b = self.pairs[best]
        if self.slack_after(a, b) >= self.slack_after(b, a):
            return best, a, b
        return best, b, a

    def search(self) -> bool:
        if self.nbad == 0:
            return True
        choice = self.pick()
        if choice is None:
            return False
        p, first, second = choice
        for hi in (first, second):
            self.nodes += 1
            if self.nodes > self.budget:
                raise BudgetExhausted
            mark = len(self.trail)
            self.decide(p, hi)
            if self.propagate(self.pairs[p]) and self.search():
                return True
            self.undo(mark)
        return False

    def witness(self) -> PairwiseAssignment:
        pa = PairwiseAssignment()
        for p, (a, b) in enumerate(self.pairs):
            if self.orient[p] == -1:
                pa.set(b, a)
            else:
                pa.set(a, b)
        for a, b in self.all_pairs:
            if pa.winner(a, b) is None:
                pa.set(a, b)
        return pa


def solve_exact(jobset: JobSet, mode: BoundMode, budget: int = DEFAULT_BUDGET,
                hints: Sequence[PairwiseAssignment] = ()) -> AssignmentOutcome:
    """Decide whether a feasible pairwise assignment exists.

    ``hints`` are complete assignments tried before the search (for example the
    orientation induced by a feasible ordering). Status is ``unknown`` when the
    node budget runs out.
    """
    check_pairwise_mode(jobset, mode)
    for hint in hints:
        if hint.covers(jobset):
            bounds = pairwise_bounds(jobset, hint, mode)
            if all(b.total <= jobset.jobs[b.job].deadline and not b.saturated for b in bounds):
                return AssignmentOutcome(FEASIBLE, pairwise=hint.copy(),
                                         bounds={b.job: b for b in bounds},
                                         accepted=list(range(jobset.n)))
    s = _Search(jobset, mode, budget)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * len(s.pairs) + 1000))
    try:
        found = s.propagate(range(jobset.n)) and s.search()
    except BudgetExhausted:
        return AssignmentOutcome(UNKNOWN, nodes=s.nodes)
    finally:
        sys.setrecursionlimit(limit)
    if not found:
        return AssignmentOutcome(INFEASIBLE, nodes=s.nodes)
    pa = s.witness()
    bounds = pairwise_bounds(jobset, pa, mode)
    if not all(b.total <= jobset.jobs[b.job].deadline for b in bounds):
        raise AssertionError("search accepted an assignment that misses a deadline")
    return AssignmentOutcome(FEASIBLE, pairwise=pa, bounds={b.job: b for b in bounds},
                             accepted=list(range(jobset.n)), nodes=s.nodes)


@dataclass
class LinearProgram:
    """A pure feasibility 0-1 program: named variables and linear rows."""

    binaries: list[str] = field(default_factory=list)
    continuous: list[str] = field(default_factory=list)
    upper: dict[str, int] = field(default_factory=dict)
    rows: list[tuple[str, list[tuple[int, str]], str, int]] = field(default_factory=list)

    def add_row(self, name: str, terms: list[tuple[int, str]], sense: str, rhs: int) -> None:
        self.rows.append((name, terms, sense, rhs))

    def count(self, prefix: str) -> int:
        return sum(name.startswith(prefix) for name in self.binaries + self.continuous)

    def rows_named(self, prefix: str) -> list[tuple[str, list[tuple[int, str]], str, int]]:
        return [r for r in self.rows if r[0].startswith(prefix)]

    def to_lp(self) -> str:
        lines = ["\\ pairwise priority assignment feasibility program", "Minimize", " obj:",
                 "Subject To"]
        for name, terms, sense, rhs in self.rows:
            lines.append(f" {name}: {_expr(terms)} {sense} {rhs}")
        lines.append("Bounds")
        for v in self.continuous:
            if v in self.upper:
                lines.append(f" 0 <= {v} <= {self.upper[v]}")
            else:
                lines.append(f" {v} >= 0")
        if self.binaries:
            lines.append("Binaries")
            lines.extend(f" {v}" for v in self.binaries)
        lines.append("End")
        return "\n".join(lines) + "\n"


def _expr(terms: list[tuple[int, str]]) -> str:
    parts = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{mag} {var}"
        parts.append(f"{sign} {body}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def build_program(jobset: JobSet, mode: BoundMode) -> LinearProgram:
    """Pair-orientation binaries, big-M stage maxima and one delay row per job."""
    check_pairwise_mode(jobset, mode)
    comp = competitor_sets(jobset)
    add_st, blk_st = _stages(jobset, mode)
    big_m = max((p for job in jobset.jobs for p in job.proc), default=0)
    lp = LinearProgram()

    def x(hi: int, lo: int) -> str:
        return f"X_{hi}_{lo}"

    for a, b in comp.pairs():
        lp.binaries += [x(a, b), x(b, a)]
        lp.add_row(f"anti_{a}_{b}", [(1, x(a, b)), (1, x(b, a))], "=", 1)

    for i, job in enumerate(jobset.jobs):
        partners = sorted(k for k in comp.all[i] if jobset.overlaps(i, k))
        delta = f"delta_{i}"
        lp.continuous.append(delta)
        # delta_i - sum(job-additive * X_k_i) - sum(theta) - sum(block) = t_i1
        row: list[tuple[int, str]] = [(1, delta)]
        row += [(-job_additive(jobset, i, k, mode), x(k, i)) for k in partners
                if job_additive(jobset, i, k, mode) > 0]
        const = max(job.proc)

        for j in add_st:
            cands = [k for k in partners if k in comp.per_stage[i][j]]
            if not cands:
                const += job.proc[j]
                continue
            theta = f"theta_{i}_{j}"
            lp.continuous.append(theta)
            row.append((-1, theta))
            zs = [i] + cands
            sel = [f"b_{i}_{j}_{y}" for y in range(len(zs))]
            lp.binaries += sel
            for z, b in zip(zs, sel):
                if z == i:
                    lp.add_row(f"tlo_{i}_{j}_{z}", [(1, theta)], ">=", job.proc[j])
                    lp.add_row(f"thi_{i}_{j}_{z}", [(1, theta), (big_m, b)], "<=",
                               big_m + job.proc[j])
                else:
                    p = jobset.profile(i, z).shared_proc[j]
                    lp.add_row(f"tlo_{i}_{j}_{z}", [(1, theta), (-p, x(z, i))], ">=", 0)
                    lp.add_row(f"thi_{i}_{j}_{z}", [(1, theta), (-p, x(z, i)), (big_m, b)],
                               "<=", big_m)
            lp.add_row(f"tsel_{i}_{j}", [(1, b) for b in sel], "=", 1)

        for j in blk_st:
            cands = [k for k in partners if k in comp.per_stage[i][j]]
            if not cands:
                continue
            lam = f"block_{i}_{j}"
            lp.continuous.append(lam)
            row.append((-1, lam))
            sel = [f"c_{i}_{j}_{y}" for y in range(len(cands))]
            lp.binaries += sel
            for z, c in zip(cands, sel):
                p = jobset.profile(i, z).shared_proc[j]
                lp.add_row(f"blo_{i}_{j}_{z}", [(1, lam), (-p, x(i, z))], ">=", 0)
                lp.add_row(f"bhi_{i}_{j}_{z}", [(1, lam), (-p, x(i, z)), (big_m, c)], "<=",
                           big_m)
            lp.add_row(f"bsel_{i}_{j}", [(1, c) for c in sel], "=", 1)

        lp.add_row(f"delay_{i}", row, "=", const)
        lp.add_row(f"deadline_{i}", [(1, delta)], "<=", job.deadline)
    return lp


def export_lp(jobset: JobSet, mode: BoundMode) -> str:
    return build_program(jobset, mode).to_lp()
