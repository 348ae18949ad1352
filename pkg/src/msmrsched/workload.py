"""Edge-computing workload generator (offload AP, server, download AP) and heaviness metrics.

Heaviness of job i at stage j is P_ij / D_i. A job is heavy at a stage when its
heaviness there reaches the threshold ``beta``; heavy stage times are drawn
with heaviness in [beta, 2 beta] and light ones below beta. All heaviness
arithmetic is exact (``Fraction``).

Sampling procedure, per attempt:

1. per stage, pick round(h_j * n) heavy jobs uniformly without replacement;
2. per job, draw the deadline uniformly from the base window
   [max_j lo_j / beta, span * max_j hi_j / beta], narrowed so that every
   heavy and light stage time can fall inside its range;
3. per job and stage, draw the processing time uniformly over the integers of
   the stage range that give the required heaviness class;
4. per stage, map jobs to resources greedily (heaviest first) onto the least
   loaded resource, ties broken at random;
5. accept if the heaviest resource load H is at most ``gamma``, else retry.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Any

from .model import Job, JobSet, Pipeline


class GenerationError(RuntimeError):
    pass


def _frac(x: Any) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class EdgeConfig:
    num_aps: int = 25
    num_servers: int = 20
    num_jobs: int = 100
    # microseconds
    offload_range: tuple[int, int] = (2_000, 200_000)
    compute_range: tuple[int, int] = (50_000, 500_000)
    download_range: tuple[int, int] = (2_000, 100_000)
    beta: Fraction = Fraction(15, 100)
    per_stage_heavy: tuple[Fraction, Fraction, Fraction] = (
        Fraction(5, 100), Fraction(5, 100), Fraction(1, 100))
    gamma: Fraction = Fraction(7, 10)
    seed: int = 0
    deadline_span: Fraction = Fraction(2)
    max_attempts: int = 1000

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _frac(self.beta))
        object.__setattr__(self, "gamma", _frac(self.gamma))
        object.__setattr__(self, "deadline_span", _frac(self.deadline_span))
        object.__setattr__(self, "per_stage_heavy",
                           tuple(_frac(h) for h in self.per_stage_heavy))
        for name in ("offload_range", "compute_range", "download_range"):
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (int(lo), int(hi)))
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must be a non-empty positive range, got {(lo, hi)}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if len(self.per_stage_heavy) != 3 or not all(0 <= h <= 1 for h in self.per_stage_heavy):
            raise ValueError("per-stage heavy ratios must be three values in [0, 1]")
        if min(self.num_aps, self.num_servers) < 1 or self.num_jobs < 0:
            raise ValueError("need at least one AP and one server, and a non-negative job count")
        if self.deadline_span < 1:
            raise ValueError("deadline_span must be at least 1")

    @property
    def ranges(self) -> tuple[tuple[int, int], ...]:
        return (self.offload_range, self.compute_range, self.download_range)

    def pipeline(self) -> Pipeline:
        aps = tuple(f"ap{y}" for y in range(self.num_aps))
        servers = tuple(f"srv{y}" for y in range(self.num_servers))
        return Pipeline((aps, servers, aps))

    def with_(self, **changes) -> "EdgeConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("beta", "gamma", "deadline_span"):
            d[key] = str(d[key])
        d["per_stage_heavy"] = [str(h) for h in self.per_stage_heavy]
        for key in ("offload_range", "compute_range", "download_range"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EdgeConfig":
        d = dict(d)
        for key in ("offload_range", "compute_range", "download_range"):
            if key in d:
                d[key] = tuple(d[key])
        if "per_stage_heavy" in d:
            d["per_stage_heavy"] = tuple(d["per_stage_heavy"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "EdgeConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class HeavinessReport:
    h: tuple[tuple[Fraction, ...], ...]
    chi: dict[tuple[int, str], Fraction] = field(hash=False)
    H: Fraction
    heavy_ratio: tuple[Fraction, ...]

    def job_heaviness(self, i: int) -> Fraction:
        return sum(self.h[i], Fraction(0))


def heaviness(jobset: JobSet, beta) -> HeavinessReport:
    beta = _frac(beta)
    h = tuple(tuple(Fraction(p, job.deadline) for p in job.proc) for job in jobset.jobs)
    chi: dict[tuple[int, str], Fraction] = {}
    for job in jobset.jobs:
        for j, r in enumerate(job.mapping):
            chi[(j, r)] = chi.get((j, r), Fraction(0)) + h[job.id][j]
    H = max(chi.values(), default=Fraction(0))
    n = jobset.n
    ratio = tuple(
        Fraction(sum(h[i][j] >= beta for i in range(n)), n) if n else Fraction(0)
        for j in range(jobset.num_stages)
    )
    return HeavinessReport(h, chi, H, ratio)


def heavy_count(ratio: Fraction, n: int) -> int:
    """round(ratio * n), halves rounded up."""
    return math.floor(ratio * n + Fraction(1, 2))


def _deadline_window(cfg: EdgeConfig, heavy: list[bool]) -> tuple[int, int]:
    beta = cfg.beta
    his = [hi for _, hi in cfg.ranges]
    los = [lo for lo, _ in cfg.ranges]
    d_lo = math.floor(max(los) / beta) + 1
    d_hi = math.floor(cfg.deadline_span * max(his) / beta)
    for j, (lo, hi) in enumerate(cfg.ranges):
        if heavy[j]:
            # some P in [lo, hi] with beta*D <= P <= 2*beta*D
            d_lo = max(d_lo, math.ceil(lo / (2 * beta)))
            d_hi = min(d_hi, math.floor(hi / beta))
        else:
            # some P >= lo with P < beta*D
            d_lo = max(d_lo, math.floor(lo / beta) + 1)
    return d_lo, d_hi


def _proc_window(cfg: EdgeConfig, j: int, deadline: int, heavy: bool) -> tuple[int, int]:
    lo, hi = cfg.ranges[j]
    if heavy:
        return max(lo, math.ceil(cfg.beta * deadline)), min(hi, math.floor(2 * cfg.beta * deadline))
    return lo, min(hi, math.ceil(cfg.beta * deadline) - 1)


def _map_stage(rng: random.Random, weights: list[Fraction], pool: tuple[str, ...]) -> list[str]:
    load = {r: Fraction(0) for r in pool}
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], rng.random()))
    out = [""] * len(weights)
    for i in order:
        least = min(load.values())
        r = rng.choice([r for r in pool if load[r] == least])
        out[i] = r
        load[r] += weights[i]
    return out


def _attempt(cfg: EdgeConfig, rng: random.Random) -> JobSet:
    n = cfg.num_jobs
    heavy = [[False] * 3 for _ in range(n)]
    for j, ratio in enumerate(cfg.per_stage_heavy):
        for i in rng.sample(range(n), heavy_count(ratio, n)):
            heavy[i][j] = True
    deadlines, procs = [], []
    for i in range(n):
        d_lo, d_hi = _deadline_window(cfg, heavy[i])
        if d_lo > d_hi:
            raise GenerationError(
                f"no deadline satisfies heavy/light targets {heavy[i]} with beta={cfg.beta}")
        D = rng.randint(d_lo, d_hi)
        proc = []
        for j in range(3):
            p_lo, p_hi = _proc_window(cfg, j, D, heavy[i][j])
            if p_lo > p_hi:
                raise GenerationError(f"stage {j} time range cannot meet beta={cfg.beta} at D={D}")
            proc.append(rng.randint(p_lo, p_hi))
        deadlines.append(D)
        procs.append(proc)
    pipeline = cfg.pipeline()
    stage_maps = [
        _map_stage(rng, [Fraction(procs[i][j], deadlines[i]) for i in range(n)], pipeline.pools[j])
        for j in range(3)
    ]
    jobs = tuple(
        Job(i, 0, tuple(procs[i]), deadlines[i], tuple(stage_maps[j][i] for j in range(3)))
        for i in range(n)
    )
    return JobSet(pipeline, jobs)


def generate(cfg: EdgeConfig) -> tuple[JobSet, HeavinessReport]:
    """Deterministic in ``cfg.seed``; retries until the heaviness bound holds."""
    rng = random.Random(cfg.seed)
    last_H = None
    for _ in range(cfg.max_attempts):
        jobset = _attempt(cfg, rng)
        report = heaviness(jobset, cfg.beta)
        if report.H <= cfg.gamma:
            return jobset, report
        last_H = report.H
    raise GenerationError(
        f"heaviness bound gamma={cfg.gamma} not met in {cfg.max_attempts} attempts "
        f"(last H={float(last_H):.3f})")
