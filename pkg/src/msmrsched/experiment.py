"""Acceptance-ratio and admission-control sweeps over generated edge workloads.

Instance seeds come from (base seed, axis index, case index) through chained
splitmix64 steps, so the instances of a point never depend on which methods
run. Cases run in a process pool sized by ``MSMRSCHED_WORKERS`` (default 1);
results are collected in case order, so the CSV does not depend on
completion order.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .assign import (
    UNKNOWN,
    AssignmentOutcome,
    dm,
    dm_admission,
    dmr,
    dmr_admission,
    opdca,
    opdca_admission,
)
from .dca import BoundMode, ModeError, ordering_bounds
from .model import JobSet
from .opt import solve_exact
from .priorities import PairwiseAssignment, pairwise_bounds
from .sim import dcmp
from .workload import EdgeConfig, generate, heaviness

log = logging.getLogger(__name__)

WORKERS_ENV = "MSMRSCHED_WORKERS"
AXES = ("beta", "heavy", "gamma")
METHODS = ("DM", "DMR", "OPDCA", "OPT", "DCMP")
ADMISSION_METHODS = ("DM", "DMR", "OPDCA")
DEFAULT_OPT_BUDGET = 20_000
_MASK = 2**64 - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def case_seed(base: int, axis_index: int, case_index: int) -> int:
    return splitmix64(splitmix64(splitmix64(base & _MASK) ^ axis_index) ^ case_index)


def _fmt(x: Fraction) -> str:
    """Exact decimal text when the fraction terminates, otherwise ``p/q``."""
    d, twos, fives = x.denominator, 0, 0
    while d % 2 == 0:
        d, twos = d // 2, twos + 1
    while d % 5 == 0:
        d, fives = d // 5, fives + 1
    if d != 1:
        return str(x)
    k = max(twos, fives)
    if k == 0:
        return str(x.numerator)
    scaled = abs(x.numerator) * 10 ** k // x.denominator
    digits = str(scaled).rjust(k + 1, "0")
    text = (digits[:-k] + "." + digits[-k:]).rstrip("0").rstrip(".")
    return ("-" if x < 0 else "") + text


def _frac(v: Any) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(str(v))


@dataclass(frozen=True)
class ExperimentSpec:
    axis: str
    values: tuple
    cases: int
    methods: tuple[str, ...]
    base: EdgeConfig = field(default_factory=EdgeConfig)
    output: str | None = None
    mode: BoundMode = BoundMode.EDGE_MIXED
    opt_budget: int = DEFAULT_OPT_BUDGET
    timing: bool = False

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.axis == "heavy":
            values = tuple(tuple(_frac(h) for h in v) for v in self.values)
            if any(len(v) != 3 for v in values):
                raise ValueError("heavy axis values must be three ratios each")
        else:
            values = tuple(_frac(v) for v in self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "methods", tuple(m.upper() for m in self.methods))
        if not values:
            raise ValueError("need at least one axis value")
        if not self.methods:
            raise ValueError("need at least one method")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
        if self.cases < 1:
            raise ValueError("cases per point must be at least 1")
        if self.opt_budget < 1:
            raise ValueError("OPT budget must be positive")
        if not (self.mode.pairwise and self.mode.opa_compatible):
            raise ModeError(f"sweeps need a mode usable by every method, not {self.mode.value}")

    def config_at(self, point: int) -> EdgeConfig:
        v = self.values[point]
        key = {"beta": "beta", "heavy": "per_stage_heavy", "gamma": "gamma"}[self.axis]
        return self.base.with_(**{key: v})

    def label(self, point: int) -> str:
        v = self.values[point]
        return ",".join(_fmt(h) for h in v) if self.axis == "heavy" else _fmt(v)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        if "base" in d:
            d["base"] = EdgeConfig.from_dict(d["base"])
        if "mode" in d:
            d["mode"] = BoundMode(d["mode"])
        for key in ("values", "methods"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class ExperimentRow:
    axis: str
    value: str
    method: str
    cases: int
    accepted: int
    unknown: int = 0
    rejected_heaviness: Fraction | None = None
    mean_ms: float | None = None
    max_ms: float | None = None

    @property
    def acceptance_ratio(self) -> Fraction:
        return Fraction(100 * self.accepted, self.cases)

    def as_csv(self, timing: bool) -> list[str]:
        row = [self.axis, self.value, self.method, str(self.cases), str(self.accepted),
               f"{float(self.acceptance_ratio):.2f}", str(self.unknown),
               "" if self.rejected_heaviness is None else f"{float(self.rejected_heaviness):.4f}"]
        if timing:
            row += [f"{self.mean_ms:.3f}", f"{self.max_ms:.3f}"]
        return row


CSV_HEADER = ["axis", "value", "method", "cases", "accepted", "acceptance_ratio", "unknown",
              "rejected_heaviness"]
TIMING_HEADER = ["mean_ms", "max_ms"]


def _valid_pairwise(jobset: JobSet, pa: PairwiseAssignment | None, mode: BoundMode) -> bool:
    if pa is None or not pa.covers(jobset):
        return False
    return all(not b.saturated and b.total <= jobset.jobs[b.job].deadline
               for b in pairwise_bounds(jobset, pa, mode))


def _valid_order(jobset: JobSet, order: list[int] | None, mode: BoundMode) -> bool:
    if order is None or sorted(order) != list(range(jobset.n)):
        return False
    return all(not b.saturated and b.total <= jobset.jobs[b.job].deadline
               for b in ordering_bounds(jobset, order, mode))


def revalidate(jobset: JobSet, method: str, out: AssignmentOutcome, mode: BoundMode) -> bool:
    """Recheck an accepted outcome from scratch."""
    if method in ("DM", "DMR", "OPT"):
        return _valid_pairwise(jobset, out.pairwise, mode)
    if method == "OPDCA":
        return _valid_order(jobset, out.order, mode)
    if method == "DCMP":
        return len(out.delays) == jobset.n and all(
            out.delays[i] <= jobset.jobs[i].deadline for i in range(jobset.n))
    raise ValueError(method)


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - t0) * 1000


def run_methods(jobset: JobSet, methods: Sequence[str], mode: BoundMode,
                opt_budget: int = DEFAULT_OPT_BUDGET) -> dict[str, tuple[str, float]]:
    """Run each method on one instance: method -> (status, milliseconds).

    OPT is warm-started with the OPDCA ordering and the DMR assignment; when
    those methods are not selected they are computed for the hints anyway,
    and their time is charged to OPT.
    """
    results: dict[str, tuple[str, float]] = {}
    outcomes: dict[str, AssignmentOutcome] = {}
    solvers = {"DM": dm, "DMR": dmr, "OPDCA": opdca}
    for m in methods:
        if m in solvers:
            outcomes[m], ms = _timed(solvers[m], jobset, mode)
        elif m == "DCMP":
            outcomes[m], ms = _timed(dcmp, jobset, mode.stage_preemptive(jobset.num_stages))
        else:
            continue
        results[m] = (outcomes[m].status, ms)
    if "OPT" in methods:
        extra = 0.0
        for m in ("OPDCA", "DMR"):
            if m not in outcomes:
                outcomes[m], ms = _timed(solvers[m], jobset, mode)
                extra += ms
        hints = []
        if outcomes["OPDCA"].feasible:
            hints.append(PairwiseAssignment.from_ordering(jobset, outcomes["OPDCA"].ordering))
        if outcomes["DMR"].feasible:
            hints.append(outcomes["DMR"].pairwise)
        outcomes["OPT"], ms = _timed(solve_exact, jobset, mode, opt_budget, hints)
        results["OPT"] = (outcomes["OPT"].status, ms + extra)
        if outcomes["OPDCA"].feasible and not outcomes["OPT"].feasible:
            log.error("OPDCA accepted an instance that OPT did not (status %s)",
                      outcomes["OPT"].status)
    for m, (status, ms) in results.items():
        if outcomes[m].feasible and not revalidate(jobset, m, outcomes[m], mode):
            raise AssertionError(f"{m} accepted an instance whose witness fails revalidation")
    return results


def rejected_heaviness(jobset: JobSet, rejected: Sequence[int]) -> Fraction:
    """Percentage of total job heaviness (sum over stages of P/D) that was rejected."""
    rep = heaviness(jobset, Fraction(1))
    total = sum((rep.job_heaviness(i) for i in range(jobset.n)), Fraction(0))
    if total == 0:
        return Fraction(0)
    return 100 * sum((rep.job_heaviness(i) for i in rejected), Fraction(0)) / total


def run_admission_methods(jobset: JobSet, methods: Sequence[str], mode: BoundMode
                          ) -> dict[str, tuple[list[int], float]]:
    """Admission variants: method -> (rejected ids, milliseconds)."""
    solvers = {"DM": dm_admission, "DMR": dmr_admission, "OPDCA": opdca_admission}
    out = {}
    for m in methods:
        res, ms = _timed(solvers[m], jobset, mode)
        sub, keep = jobset.subset(res.accepted)
        if m == "OPDCA":
            position = {old: new for new, old in enumerate(keep)}
            ok = _valid_order(sub, [position[i] for i in res.order], mode)
        else:
            ok = _valid_pairwise(sub, res.pairwise.restricted(keep), mode)
        if not ok:
            raise AssertionError(f"{m} admission kept a set that fails revalidation")
        out[m] = (list(res.rejected), ms)
    return out


def _case(task: tuple) -> tuple:
    kind, cfg, methods, mode, budget = task
    jobset, _ = generate(cfg)
    if kind == "accept":
        return jobset.n, run_methods(jobset, methods, mode, budget)
    res = run_admission_methods(jobset, methods, mode)
    return jobset.n, {m: (rejected_heaviness(jobset, rej), len(rej), ms)
                      for m, (rej, ms) in res.items()}


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be at least 1")
    return n


def _map(tasks: list) -> list:
    n = _workers()
    if n == 1:
        return [_case(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_case, tasks, chunksize=max(1, len(tasks) // (4 * n))))


def _tasks(spec: ExperimentSpec, point: int, kind: str, methods) -> list:
    cfg = spec.config_at(point)
    return [(kind, cfg.with_(seed=case_seed(spec.base.seed, point, c)), tuple(methods),
             spec.mode, spec.opt_budget) for c in range(spec.cases)]


def _timing(ms: list[float]) -> tuple[float, float]:
    return sum(ms) / len(ms), max(ms)


def run_experiment(spec: ExperimentSpec) -> list[ExperimentRow]:
    rows = []
    for point in range(len(spec.values)):
        results = _map(_tasks(spec, point, "accept", spec.methods))
        for m in spec.methods:
            statuses = [r[m][0] for _, r in results]
            mean_ms, max_ms = _timing([r[m][1] for _, r in results])
            rows.append(ExperimentRow(
                spec.axis, spec.label(point), m, spec.cases,
                accepted=sum(s == "feasible" for s in statuses),
                unknown=sum(s == UNKNOWN for s in statuses),
                mean_ms=mean_ms, max_ms=max_ms))
    return rows


def run_admission(spec: ExperimentSpec) -> list[ExperimentRow]:
    """Admission sweep: AR counts cases with nothing rejected; rejected heaviness is the mean."""
    methods = [m for m in spec.methods if m in ADMISSION_METHODS]
    skipped = [m for m in spec.methods if m not in ADMISSION_METHODS]
    if skipped:
        raise ValueError(f"no admission variant for {skipped}; choose from {ADMISSION_METHODS}")
    rows = []
    for point in range(len(spec.values)):
        results = _map(_tasks(spec, point, "admit", methods))
        for m in methods:
            per_case = [r[m] for _, r in results]
            mean_ms, max_ms = _timing([c[2] for c in per_case])
            rows.append(ExperimentRow(
                spec.axis, spec.label(point), m, spec.cases,
                accepted=sum(c[1] == 0 for c in per_case),
                rejected_heaviness=sum((c[0] for c in per_case), Fraction(0)) / spec.cases,
                mean_ms=mean_ms, max_ms=max_ms))
    return rows


def to_csv(rows: Sequence[ExperimentRow], timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + (TIMING_HEADER if timing else []))
    for r in rows:
        w.writerow(r.as_csv(timing))
    return buf.getvalue()


def acceptance_table(rows: Sequence[ExperimentRow]) -> dict[str, dict[str, Fraction]]:
    """method -> axis label -> AR percentage."""
    out: dict[str, dict[str, Fraction]] = {}
    for r in rows:
        out.setdefault(r.method, {})[r.value] = r.acceptance_ratio
    return out
