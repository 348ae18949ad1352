"""Jobs, pipelines and the pairwise structure derived from a job-to-resource mapping.

Stages are indexed from 0 internally. Times are non-negative integers.
A stage ``j`` is *shared* by jobs ``i`` and ``k`` when both are mapped to the
same resource there and both have a positive processing time at ``j``; a
stage with zero processing time is skipped by the job and never shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class Job:
    id: int
    arrival: int
    proc: tuple[int, ...]
    deadline: int
    mapping: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "proc", tuple(int(p) for p in self.proc))
        object.__setattr__(self, "mapping", tuple(str(r) for r in self.mapping))
        if len(self.proc) == 0 or len(self.proc) != len(self.mapping):
            raise ValueError(f"job {self.id}: proc and mapping must have the same length >= 1")
        if any(p < 0 for p in self.proc):
            raise ValueError(f"job {self.id}: negative processing time")
        if self.deadline <= 0:
            raise ValueError(f"job {self.id}: deadline must be positive")
        if self.arrival < 0:
            raise ValueError(f"job {self.id}: negative arrival")
        if max(self.proc + (self.deadline, self.arrival)) > U64_MAX:
            raise ValueError(f"job {self.id}: time value exceeds 64 bits")

    @property
    def num_stages(self) -> int:
        return len(self.proc)

    @property
    def total_proc(self) -> int:
        return sum(self.proc)

    def window(self) -> tuple[int, int]:
        return self.arrival, self.arrival + self.deadline


@dataclass(frozen=True)
class Pipeline:
    pools: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        pools = tuple(tuple(str(r) for r in pool) for pool in self.pools)
        object.__setattr__(self, "pools", pools)
        if not pools:
            raise ValueError("pipeline needs at least one stage")
        for j, pool in enumerate(pools):
            if not pool:
                raise ValueError(f"stage {j} has an empty resource pool")
            if len(set(pool)) != len(pool):
                raise ValueError(f"stage {j} has duplicate resource ids")

    @classmethod
    def single_resource(cls, num_stages: int) -> "Pipeline":
        return cls(tuple((f"r{j}",) for j in range(num_stages)))

    @property
    def num_stages(self) -> int:
        return len(self.pools)

    @property
    def is_single_resource(self) -> bool:
        return all(len(pool) == 1 for pool in self.pools)


@dataclass(frozen=True)
class SegmentProfile:
    """Shared-stage structure of job ``k`` as seen from job ``i``."""

    i: int
    k: int
    shared_proc: tuple[int, ...]
    u: int
    v: int

    @property
    def m(self) -> int:
        return self.u + self.v

    @property
    def w(self) -> int:
        return self.u + 2 * self.v

    @cached_property
    def descending(self) -> tuple[int, ...]:
        return tuple(sorted((p for p in self.shared_proc if p > 0), reverse=True))

    def top(self, x: int) -> int:
        """Sum of the ``x`` largest shared stage times (missing terms count as 0)."""
        return sum(self.descending[:x])


@dataclass(frozen=True)
class JobSet:
    pipeline: Pipeline
    jobs: tuple[Job, ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        jobs = tuple(self.jobs)
        object.__setattr__(self, "jobs", jobs)
        n_stages = self.pipeline.num_stages
        for idx, job in enumerate(jobs):
            if job.id != idx:
                raise ValueError(f"job ids must be 0..n-1 without gaps (position {idx} has id {job.id})")
            if job.num_stages != n_stages:
                raise ValueError(f"job {job.id} has {job.num_stages} stages, pipeline has {n_stages}")
            for j, r in enumerate(job.mapping):
                if r not in self.pipeline.pools[j]:
                    raise ValueError(f"job {job.id}: resource {r!r} not in stage {j} pool")

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def num_stages(self) -> int:
        return self.pipeline.num_stages

    def __len__(self) -> int:
        return len(self.jobs)

    def __getitem__(self, i: int) -> Job:
        return self.jobs[i]

    def check_id(self, i: int) -> None:
        if not isinstance(i, int) or not 0 <= i < len(self.jobs):
            raise ValueError(f"invalid job id {i!r}")

    def shares(self, i: int, k: int, j: int) -> bool:
        a, b = self.jobs[i], self.jobs[k]
        return a.mapping[j] == b.mapping[j] and a.proc[j] > 0 and b.proc[j] > 0

    def overlaps(self, i: int, k: int) -> bool:
        """True when the arrival-to-deadline windows of ``i`` and ``k`` intersect."""
        ai, di = self.jobs[i].window()
        ak, dk = self.jobs[k].window()
        return ak <= di and ai <= dk

    def profile(self, i: int, k: int) -> SegmentProfile:
        key = ("profile", i, k)
        prof = self._cache.get(key)
        if prof is None:
            prof = self._cache[key] = _scan_segments(self, i, k)
        return prof

    def subset(self, ids: Iterable[int]) -> tuple["JobSet", list[int]]:
        """Renumbered sub-jobset; also returns the original id of each new job."""
        keep = sorted(set(ids))
        jobs = tuple(
            Job(new, self.jobs[old].arrival, self.jobs[old].proc, self.jobs[old].deadline,
                self.jobs[old].mapping)
            for new, old in enumerate(keep)
        )
        return JobSet(self.pipeline, jobs), keep


def _scan_segments(jobset: JobSet, i: int, k: int) -> SegmentProfile:
    N = jobset.num_stages
    pk = jobset.jobs[k].proc
    shared = [jobset.shares(i, k, j) for j in range(N)]
    u = v = run = 0
    for j in range(N + 1):
        if j < N and shared[j]:
            run += 1
            continue
        if run == 1:
            u += 1
        elif run >= 2:
            v += 1
        run = 0
    shared_proc = tuple(pk[j] if shared[j] else 0 for j in range(N))
    return SegmentProfile(i, k, shared_proc, u, v)


def segment_profile(jobset: JobSet, i: int, k: int) -> SegmentProfile:
    jobset.check_id(i)
    jobset.check_id(k)
    if i == k:
        raise ValueError("segment profile needs two distinct jobs")
    return jobset.profile(i, k)


@dataclass(frozen=True)
class Competitors:
    per_stage: tuple[tuple[frozenset[int], ...], ...]  # [i][j] -> M_{i,j}
    all: tuple[frozenset[int], ...]  # [i] -> M_i

    def pairs(self) -> list[tuple[int, int]]:
        return sorted((i, k) for i, ks in enumerate(self.all) for k in ks if i < k)


def competitor_sets(jobset: JobSet) -> Competitors:
    cached = jobset._cache.get("competitors")
    if cached is not None:
        return cached
    n, N = jobset.n, jobset.num_stages
    by_resource: dict[tuple[int, str], list[int]] = {}
    for job in jobset.jobs:
        for j, r in enumerate(job.mapping):
            by_resource.setdefault((j, r), []).append(job.id)
    per_stage = tuple(
        tuple(
            frozenset(k for k in by_resource[(j, jobset.jobs[i].mapping[j])] if k != i)
            for j in range(N)
        )
        for i in range(n)
    )
    total = tuple(frozenset().union(*stages) for stages in per_stage)
    comp = Competitors(per_stage, total)
    jobset._cache["competitors"] = comp
    return comp


@dataclass(frozen=True)
class InterferenceSets:
    i: int
    higher: frozenset[int]
    lower: frozenset[int]
    higher_after: frozenset[int]

    @property
    def q(self) -> frozenset[int]:
        return self.higher | {self.i}


def overlap_filter(jobset: JobSet, i: int, ids: Iterable[int]) -> frozenset[int]:
    return frozenset(k for k in ids if jobset.overlaps(i, k))


def interference_sets(
    jobset: JobSet, i: int, higher: Iterable[int], lower: Iterable[int]
) -> InterferenceSets:
    jobset.check_id(i)
    higher, lower = frozenset(higher), frozenset(lower)
    for k in higher | lower:
        jobset.check_id(k)
    if higher & lower:
        raise ValueError(f"jobs {sorted(higher & lower)} are both higher and lower than {i}")
    if i in higher or i in lower:
        raise ValueError(f"job {i} cannot interfere with itself")
    higher = overlap_filter(jobset, i, higher)
    lower = overlap_filter(jobset, i, lower)
    a_i = jobset.jobs[i].arrival
    after = frozenset(k for k in higher if jobset.jobs[k].arrival > a_i)
    return InterferenceSets(i, higher, lower, after)


def make_jobset(
    proc: Sequence[Sequence[int]],
    deadlines: Sequence[int],
    mapping: Sequence[Sequence[str]] | None = None,
    arrivals: Sequence[int] | None = None,
    pipeline: Pipeline | None = None,
) -> JobSet:
    """Build a JobSet from column data; without a mapping, one resource per stage."""
    n = len(proc)
    N = len(proc[0]) if n else (pipeline.num_stages if pipeline else 1)
    if mapping is None:
        mapping = [[f"r{j}" for j in range(N)] for _ in range(n)]
    if arrivals is None:
        arrivals = [0] * n
    if pipeline is None:
        pools = [sorted({mapping[i][j] for i in range(n)}) or [f"r{j}"] for j in range(N)]
        pipeline = Pipeline(tuple(tuple(p) for p in pools))
    jobs = tuple(
        Job(i, arrivals[i], tuple(proc[i]), deadlines[i], tuple(mapping[i])) for i in range(n)
    )
    return JobSet(pipeline, jobs)
