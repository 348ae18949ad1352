"""Event-driven simulation of fixed-priority pipelines, and the DCMP baseline.

Resources are work-conserving. At a given instant, stage completions are
handled first, then releases, then every resource (in stage, resource-id
order) dispatches. A job with zero processing time at a stage skips it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

from .assign import FEASIBLE, INFEASIBLE, AssignmentOutcome
from .dca import EdgeFlags
from .model import JobSet
from .priorities import PairwiseAssignment, PriorityOrdering

START, PREEMPT, RESUME, FINISH, EXIT = "start", "preempt", "resume", "finish-stage", "exit-pipeline"

Priorities = Union[PriorityOrdering, PairwiseAssignment]
# chooses the job to run among the candidates at (stage, resource)
Chooser = Callable[[int, str, Sequence[int]], int]


@dataclass(frozen=True)
class SimConfig:
    preemptive: tuple[bool, ...]
    dispatch: str = "ordering"  # "ordering" or "pairwise"
    tie_break: str = "lowest-id"

    @classmethod
    def uniform(cls, num_stages: int, preemptive: bool, dispatch: str = "ordering"):
        return cls((preemptive,) * num_stages, dispatch)

    @classmethod
    def edge(cls, dispatch: str = "ordering", flags: EdgeFlags = EdgeFlags()) -> "SimConfig":
        return cls(flags.preemptive(), dispatch)


@dataclass(frozen=True)
class TraceEvent:
    time: int
    stage: int
    resource: str
    job: int
    kind: str


@dataclass
class SimTrace:
    events: list[TraceEvent] = field(default_factory=list)
    completion: list[int] = field(default_factory=list)

    def delays(self, jobset: JobSet) -> list[int]:
        return [c - job.arrival for c, job in zip(self.completion, jobset.jobs)]

    def to_text(self) -> str:
        return "".join(f"{e.time} {e.stage} {e.resource} {e.job} {e.kind}\n" for e in self.events)

    def completion_table(self, jobset: JobSet) -> str:
        lines = ["job arrival deadline exit delay met"]
        for job, c in zip(jobset.jobs, self.completion):
            d = c - job.arrival
            lines.append(f"{job.id} {job.arrival} {job.deadline} {c} {d} {int(d <= job.deadline)}")
        return "\n".join(lines) + "\n"


def tournament_winner(assignment: PairwiseAssignment, candidates: Sequence[int]) -> int:
    """Job beating the most other candidates; ties go to the lowest id."""
    def wins(i: int) -> int:
        total = 0
        for k in candidates:
            if k == i:
                continue
            w = assignment.winner(i, k)
            if w is None:
                raise ValueError(f"no priority defined between competing jobs {i} and {k}")
            total += w == i
        return total
    return max(sorted(candidates), key=lambda i: (wins(i), -i))


def _next_stage(proc: Sequence[int], j: int) -> int:
    while j < len(proc) and proc[j] == 0:
        j += 1
    return j


def run(jobset: JobSet, preemptive: Sequence[bool], choose: Chooser) -> SimTrace:
    N = jobset.num_stages
    if len(preemptive) != N:
        raise ValueError(f"need {N} preemption flags, got {len(preemptive)}")
    jobs = jobset.jobs
    trace = SimTrace(completion=[-1] * jobset.n)
    stage = [0] * jobset.n
    remaining = [0] * jobset.n
    started_before = [False] * jobset.n
    queues: dict[tuple[int, str], list[int]] = {}
    running: dict[tuple[int, str], tuple[int, int]] = {}  # -> (job, run start)
    resources = sorted((j, r) for j, pool in enumerate(jobset.pipeline.pools) for r in pool)
    releases = sorted(range(jobset.n), key=lambda i: (jobs[i].arrival, i))
    nxt = 0
    done = 0

    def enter(i: int, j: int, t: int) -> None:
        nonlocal done
        j = _next_stage(jobs[i].proc, j)
        stage[i] = j
        if j == N:
            trace.completion[i] = t
            trace.events.append(TraceEvent(t, N - 1, "-", i, EXIT))
            done += 1
            return
        remaining[i] = jobs[i].proc[j]
        started_before[i] = False
        queues.setdefault((j, jobs[i].mapping[j]), []).append(i)

    t = jobs[releases[0]].arrival if releases else 0
    while done < jobset.n:
        for key in resources:
            if key in running:
                i, since = running[key]
                if since + remaining[i] == t:
                    del running[key]
                    remaining[i] = 0
                    trace.events.append(TraceEvent(t, key[0], key[1], i, FINISH))
                    enter(i, key[0] + 1, t)
        while nxt < len(releases) and jobs[releases[nxt]].arrival == t:
            enter(releases[nxt], 0, t)
            nxt += 1
        for key in resources:
            queue = queues.get(key)
            if not queue:
                continue
            j, r = key
            if key in running:
                if not preemptive[j]:
                    continue
                cur, since = running[key]
                winner = choose(j, r, queue + [cur])
                if winner == cur:
                    continue
                remaining[cur] -= t - since
                queue.append(cur)
                trace.events.append(TraceEvent(t, j, r, cur, PREEMPT))
            else:
                winner = choose(j, r, queue)
            queue.remove(winner)
            running[key] = (winner, t)
            trace.events.append(TraceEvent(t, j, r, winner, RESUME if started_before[winner] else START))
            started_before[winner] = True
        if done == jobset.n:
            break
        candidates = [since + remaining[i] for i, since in running.values()]
        if nxt < len(releases):
            candidates.append(jobs[releases[nxt]].arrival)
        if not candidates:
            raise RuntimeError("simulation stalled with unfinished jobs")
        t = min(candidates)
    return trace


def simulate(jobset: JobSet, priorities: Priorities, config: SimConfig) -> SimTrace:
    """Simulate the pipeline under a total ordering or a pairwise assignment."""
    if isinstance(priorities, PriorityOrdering):
        if len(priorities.rho) != jobset.n:
            raise ValueError("ordering does not cover every job")
        rho = priorities.rho
        return run(jobset, config.preemptive, lambda j, r, cands: min(cands, key=lambda i: (rho[i], i)))
    if isinstance(priorities, PairwiseAssignment):
        if not priorities.covers(jobset):
            raise ValueError("pairwise assignment does not cover every competing pair")
        return run(jobset, config.preemptive,
                   lambda j, r, cands: tournament_winner(priorities, cands))
    raise TypeError(f"unsupported priorities {type(priorities).__name__}")


def stage_heaviness(jobset: JobSet) -> list[list[Fraction]]:
    return [[Fraction(p, job.deadline) for p in job.proc] for job in jobset.jobs]


def split_deadline(deadline: int, weights: Sequence[Fraction]) -> list[int]:
    """Proportional integer split; floors per stage, remainder on the last stage."""
    total = sum(weights)
    if total <= 0:
        raise ValueError("cannot split a deadline over zero total heaviness")
    parts = [int(deadline * w / total) for w in weights[:-1]]
    return parts + [deadline - sum(parts)]


def virtual_deadlines(jobset: JobSet) -> list[list[int]]:
    h = stage_heaviness(jobset)
    load: dict[tuple[int, str], Fraction] = {}
    for job in jobset.jobs:
        for j, r in enumerate(job.mapping):
            load[(j, r)] = load.get((j, r), Fraction(0)) + h[job.id][j]
    out = []
    for job in jobset.jobs:
        upsilon = [load[(j, r)] for j, r in enumerate(job.mapping)]
        try:
            out.append(split_deadline(job.deadline, upsilon))
        except ValueError:
            raise ValueError(f"job {job.id} has zero total resource heaviness") from None
    return out


def dcmp_trace(jobset: JobSet, preemptive: Sequence[bool] | None = None) -> SimTrace:
    """Simulate per-stage deadline-monotonic dispatch on virtual deadlines."""
    if preemptive is None:
        preemptive = (EdgeFlags().preemptive() if jobset.num_stages == 3
                      else (True,) * jobset.num_stages)
    vd = virtual_deadlines(jobset)
    return run(jobset, preemptive, lambda j, r, cands: min(cands, key=lambda i: (vd[i][j], i)))


def dcmp(jobset: JobSet, preemptive: Sequence[bool] | None = None) -> AssignmentOutcome:
    """Per-stage deadline-monotonic scheduling on virtual deadlines, judged end to end."""
    delays = dcmp_trace(jobset, preemptive).delays(jobset)
    ok = all(d <= job.deadline for d, job in zip(delays, jobset.jobs))
    return AssignmentOutcome(FEASIBLE if ok else INFEASIBLE,
                             accepted=list(range(jobset.n)) if ok else [],
                             delays=dict(enumerate(delays)))
