"""End-to-end delay bounds from the delay composition rule.

Every bound is a sum of three kinds of terms:

* job-additive: stage times contributed once or twice per segment by each job
  in Q_i (the higher-priority jobs plus the job itself);
* stage-additive: for each stage but the last, the largest stage time among Q_i;
* lower blocking (non-preemptive modes): per stage, the largest stage time of a
  lower-priority job that may already hold the resource.

Single-resource modes use the raw processing times; multi-resource modes use
the times of the stages shared with the analysed job.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .model import U64_MAX, InterferenceSets, JobSet, interference_sets, overlap_filter


class ModeError(ValueError):
    pass


class BoundMode(enum.Enum):
    PREEMPTIVE_SINGLE = "preemptive-single"
    NONPREEMPTIVE_SINGLE = "nonpreemptive-single"
    PREEMPTIVE_MULTI = "preemptive-multi"
    NONPREEMPTIVE_MULTI = "nonpreemptive-multi"
    NONPREEMPTIVE_OPA = "nonpreemptive-opa"
    PREEMPTIVE_REFINED = "preemptive-refined"
    EDGE_MIXED = "edge-mixed"

    @property
    def single_resource(self) -> bool:
        return self in (BoundMode.PREEMPTIVE_SINGLE, BoundMode.NONPREEMPTIVE_SINGLE)

    @property
    def opa_compatible(self) -> bool:
        return self not in (BoundMode.NONPREEMPTIVE_SINGLE, BoundMode.NONPREEMPTIVE_MULTI)

    @property
    def pairwise(self) -> bool:
        """Modes usable for pairwise assignment (DM, DMR, exact search)."""
        return self in (
            BoundMode.PREEMPTIVE_REFINED, BoundMode.NONPREEMPTIVE_MULTI, BoundMode.EDGE_MIXED
        )

    def stage_preemptive(self, num_stages: int) -> tuple[bool, ...]:
        """Per-stage preemption flags of the scheduler this bound describes."""
        if self is BoundMode.EDGE_MIXED:
            return EdgeFlags().preemptive()
        preemptive = self in (
            BoundMode.PREEMPTIVE_SINGLE, BoundMode.PREEMPTIVE_MULTI, BoundMode.PREEMPTIVE_REFINED
        )
        return (preemptive,) * num_stages


@dataclass(frozen=True)
class EdgeFlags:
    offload_nonpreemptive: bool = True
    compute_preemptive: bool = True
    download_nonpreemptive: bool = True

    def preemptive(self) -> tuple[bool, bool, bool]:
        return (not self.offload_nonpreemptive, self.compute_preemptive,
                not self.download_nonpreemptive)


@dataclass(frozen=True)
class DelayBound:
    job: int
    total: int
    job_additive: tuple[tuple[int, int], ...]
    stage_additive: tuple[int, ...]
    lower_blocking: tuple[int, ...] = ()
    saturated: bool = False

    def as_dict(self) -> dict:
        return {
            "job": self.job,
            "total": self.total,
            "job_additive": [list(t) for t in self.job_additive],
            "stage_additive": list(self.stage_additive),
            "lower_blocking": list(self.lower_blocking),
            "saturated": self.saturated,
        }


def _nth_largest_sum(values: Iterable[int], x: int) -> int:
    return sum(sorted((v for v in values if v > 0), reverse=True)[:x])


def _finish(i: int, job_add: list[tuple[int, int]], stage_add: list[int],
            blocking: list[int]) -> DelayBound:
    total = sum(v for _, v in job_add) + sum(stage_add) + sum(blocking)
    saturated = total > U64_MAX
    return DelayBound(i, min(total, U64_MAX), tuple(job_add), tuple(stage_add),
                      tuple(blocking), saturated)


def _stage_max(jobset: JobSet, i: int, ids: Iterable[int], stages: Iterable[int],
               shared: bool) -> list[int]:
    """Per-stage maximum time over ``ids`` (0 for an empty set)."""
    ids = list(ids)
    out = []
    for j in stages:
        best = 0
        for k in ids:
            if k == i:
                p = jobset.jobs[i].proc[j]
            elif shared:
                p = jobset.profile(i, k).shared_proc[j]
            else:
                p = jobset.jobs[k].proc[j]
            if p > best:
                best = p
        out.append(best)
    return out


def evaluate(jobset: JobSet, i: int, higher: Iterable[int], lower: Iterable[int],
             mode: BoundMode, higher_after: Iterable[int] = (),
             edge: EdgeFlags = EdgeFlags(),
             universe: Iterable[int] | None = None) -> DelayBound:
    """Evaluate ``mode``'s bound for job ``i`` on already-filtered sets.

    No consistency checks: ``higher`` and ``lower`` may overlap, which the
    pairwise search uses for its pessimistic bounds. ``universe`` limits the
    jobs that may block in the OPA-compatible non-preemptive mode (default:
    every job of the set).
    """
    N = jobset.num_stages
    job_i = jobset.jobs[i]
    higher = sorted(set(higher) - {i})
    lower = sorted(set(lower) - {i})
    q = [i] + higher
    t_i1 = max(job_i.proc)
    blocking: list[int] = []

    if mode.single_resource:
        after = set(higher_after)
        job_add = [(i, t_i1)]
        for k in higher:
            t = _nth_largest_sum(jobset.jobs[k].proc, 2 if k in after else 1)
            job_add.append((k, t))
        stage_add = _stage_max(jobset, i, q, range(N - 1), shared=False)
        if mode is BoundMode.NONPREEMPTIVE_SINGLE:
            blocking = _stage_max(jobset, i, lower, range(N), shared=False)
        return _finish(i, job_add, stage_add, blocking)

    if mode is BoundMode.PREEMPTIVE_MULTI:
        # m_{i,i} = 1 for the job itself
        job_add = [(i, 2 * t_i1)]
        job_add += [(k, 2 * jobset.profile(i, k).m * jobset.profile(i, k).top(1)) for k in higher]
    elif mode in (BoundMode.NONPREEMPTIVE_MULTI, BoundMode.NONPREEMPTIVE_OPA):
        job_add = [(i, t_i1)]
        job_add += [(k, jobset.profile(i, k).m * jobset.profile(i, k).top(1)) for k in higher]
    else:
        job_add = [(i, t_i1)]
        job_add += [(k, jobset.profile(i, k).top(jobset.profile(i, k).w)) for k in higher]

    if mode is BoundMode.EDGE_MIXED:
        if N != 3:
            raise ModeError("edge bound needs a three-stage pipeline")
        stage_add = _stage_max(jobset, i, q, (0, 1), shared=True)
        block_stages = [j for j, nonpre in ((1, not edge.compute_preemptive),
                                            (2, edge.download_nonpreemptive)) if nonpre]
        blocking = _stage_max(jobset, i, lower, block_stages, shared=True)
        return _finish(i, job_add, stage_add, blocking)

    stage_add = _stage_max(jobset, i, q, range(N - 1), shared=True)
    if mode is BoundMode.NONPREEMPTIVE_MULTI:
        blocking = _stage_max(jobset, i, lower, range(N), shared=True)
    elif mode is BoundMode.NONPREEMPTIVE_OPA:
        pool = range(jobset.n) if universe is None else universe
        others = overlap_filter(jobset, i, (k for k in pool if k != i))
        blocking = _stage_max(jobset, i, others, range(N), shared=True)
    return _finish(i, job_add, stage_add, blocking)


def check_mode(jobset: JobSet, mode: BoundMode) -> None:
    if mode.single_resource and not jobset.pipeline.is_single_resource:
        raise ModeError(f"{mode.value} needs exactly one resource per stage")
    if mode is BoundMode.EDGE_MIXED and jobset.num_stages != 3:
        raise ModeError("edge bound needs a three-stage pipeline")


def bound(jobset: JobSet, i: int, sets: InterferenceSets, mode: BoundMode,
          universe: Iterable[int] | None = None) -> DelayBound:
    """Delay bound of job ``i`` for the given higher/lower sets."""
    check_mode(jobset, mode)
    if mode is BoundMode.EDGE_MIXED:
        return bound_edge(jobset, i, sets)
    return evaluate(jobset, i, sets.higher, sets.lower, mode, sets.higher_after,
                    universe=universe)


def bound_edge(jobset: JobSet, i: int, sets: InterferenceSets,
               flags: EdgeFlags = EdgeFlags()) -> DelayBound:
    """Three-stage edge pipeline bound; jobs are batch-released, so no late joiners."""
    if jobset.num_stages != 3:
        raise ModeError("edge bound needs a three-stage pipeline")
    return evaluate(jobset, i, sets.higher, sets.lower, BoundMode.EDGE_MIXED, edge=flags)


def bound_for(jobset: JobSet, i: int, higher: Iterable[int], lower: Iterable[int],
              mode: BoundMode, universe: Iterable[int] | None = None) -> DelayBound:
    return bound(jobset, i, interference_sets(jobset, i, higher, lower), mode, universe)


def ordering_bounds(jobset: JobSet, order: list[int], mode: BoundMode) -> list[DelayBound]:
    """Bounds of every job under a total order given highest-priority first."""
    out: list[DelayBound | None] = [None] * jobset.n
    for pos, i in enumerate(order):
        out[i] = bound_for(jobset, i, order[:pos], order[pos + 1:], mode)
    return out  # type: ignore[return-value]
