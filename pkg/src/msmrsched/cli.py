"""Command-line entry point: ``msmrsched <command> ...``.

Exit codes: 0 when the command ran, 1 when ``--check`` was given and the
verdict is infeasible, 2 on usage, parse or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import jobfile
from .assign import (
    FEASIBLE,
    AssignmentOutcome,
    dm,
    dm_admission,
    dmr,
    dmr_admission,
    opdca,
    opdca_admission,
)
from .dca import BoundMode, ModeError, check_mode, ordering_bounds
from .experiment import ExperimentSpec, run_admission, run_experiment, to_csv
from .model import JobSet
from .opt import DEFAULT_BUDGET, export_lp, solve_exact
from .priorities import PairwiseAssignment, PriorityOrdering
from .sim import SimConfig, dcmp_trace, simulate
from .workload import EdgeConfig, GenerationError, generate

MODE_ALIASES = {
    "eq1": BoundMode.PREEMPTIVE_SINGLE,
    "eq2": BoundMode.NONPREEMPTIVE_SINGLE,
    "eq3": BoundMode.PREEMPTIVE_MULTI,
    "eq4": BoundMode.NONPREEMPTIVE_MULTI,
    "eq5": BoundMode.NONPREEMPTIVE_OPA,
    "eq6": BoundMode.PREEMPTIVE_REFINED,
    "edge": BoundMode.EDGE_MIXED,
}
ANALYZE_METHODS = ("bound", "opdca", "dm", "dmr", "opt",
                   "opdca-admission", "dm-admission", "dmr-admission")
SIMULATE_METHODS = ("order", "opdca", "dm", "dmr", "opt", "dcmp")


class UsageError(Exception):
    pass


def parse_mode(text: str) -> BoundMode:
    key = text.lower()
    if key in MODE_ALIASES:
        return MODE_ALIASES[key]
    try:
        return BoundMode(key)
    except ValueError:
        names = sorted(list(MODE_ALIASES) + [m.value for m in BoundMode])
        raise argparse.ArgumentTypeError(f"unknown mode {text!r}; choose from {', '.join(names)}")


def parse_order(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"order must be comma-separated job ids, got {text!r}")


def _order_or_identity(jobset: JobSet, order: list[int] | None) -> list[int]:
    order = list(range(jobset.n)) if order is None else order
    if sorted(order) != list(range(jobset.n)):
        raise UsageError(f"--order must list every job id 0..{jobset.n - 1} exactly once")
    return order


def _bound_outcome(jobset: JobSet, mode: BoundMode, order: list[int]) -> AssignmentOutcome:
    check_mode(jobset, mode)
    bounds = ordering_bounds(jobset, order, mode)
    ok = all(not b.saturated and b.total <= jobset.jobs[b.job].deadline for b in bounds)
    return AssignmentOutcome(FEASIBLE if ok else "infeasible", order=order,
                             bounds={b.job: b for b in bounds},
                             accepted=list(range(jobset.n)) if ok else [])


def analyze(jobset: JobSet, method: str, mode: BoundMode, order: list[int] | None = None,
            budget: int = DEFAULT_BUDGET) -> dict:
    """Run one method on one instance and return a JSON-ready report."""
    if method == "bound":
        out = _bound_outcome(jobset, mode, _order_or_identity(jobset, order))
    elif method == "opt":
        out = solve_exact(jobset, mode, budget)
    else:
        fn = {"opdca": opdca, "dm": dm, "dmr": dmr, "opdca-admission": opdca_admission,
              "dm-admission": dm_admission, "dmr-admission": dmr_admission}[method]
        out = fn(jobset, mode)
    jobs = []
    for i in range(jobset.n):
        b = out.bounds.get(i)
        entry = {"job": i, "deadline": jobset.jobs[i].deadline}
        if b is not None:
            entry.update(b.as_dict())
            entry["met"] = not b.saturated and b.total <= jobset.jobs[i].deadline
        jobs.append(entry)
    return {
        "method": method,
        "mode": mode.value,
        "status": out.status,
        "order": out.order,
        "pairwise": None if out.pairwise is None else out.pairwise.to_list(),
        "flips": [list(f) for f in out.flips],
        "rejected": out.rejected,
        "nodes": out.nodes,
        "jobs": jobs,
    }


def format_report(report: dict) -> str:
    lines = [f"method {report['method']}  mode {report['mode']}  status {report['status']}"]
    if report["order"] is not None:
        lines.append("order " + " ".join(str(i) for i in report["order"]))
    if report["pairwise"]:
        lines.append("pairwise " + " ".join(f"{h}>{l}" for h, l in report["pairwise"]))
    for hi, lo in report["flips"]:
        lines.append(f"flip {lo}>{hi} -> {hi}>{lo}")
    if report["rejected"]:
        lines.append("rejected " + " ".join(str(i) for i in report["rejected"]))
    if report["method"] == "opt":
        lines.append(f"nodes {report['nodes']}")
    for e in report["jobs"]:
        if "total" not in e:
            lines.append(f"job {e['job']}: D={e['deadline']} (no bound)")
            continue
        ja = " + ".join(f"{v}[{k}]" for k, v in e["job_additive"])
        sa = " + ".join(str(v) for v in e["stage_additive"]) or "0"
        bl = " + ".join(str(v) for v in e["lower_blocking"]) or "0"
        verdict = "ok" if e["met"] else "LATE"
        sat = " saturated" if e["saturated"] else ""
        lines.append(f"job {e['job']}: delta={e['total']}{sat} D={e['deadline']} {verdict}"
                     f"  job-additive {ja}  stage-additive {sa}  blocking {bl}")
    return "\n".join(lines) + "\n"


def _write(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _load_jobset(path: str) -> JobSet:
    try:
        return jobfile.load(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def cmd_analyze(args) -> int:
    jobset = _load_jobset(args.file)
    report = analyze(jobset, args.method, args.mode, args.order, args.budget)
    _write(json.dumps(report, indent=2) + "\n" if args.json else format_report(report), args.output)
    return 1 if args.check and report["status"] != FEASIBLE else 0


def _edge_config(args) -> EdgeConfig:
    cfg = EdgeConfig()
    if args.config:
        cfg = EdgeConfig.from_json(Path(args.config).read_text())
    changes = {}
    for name in ("seed", "num_jobs", "num_aps", "num_servers"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    for name in ("beta", "gamma"):
        if getattr(args, name) is not None:
            changes[name] = Fraction(getattr(args, name))
    return cfg.with_(**changes) if changes else cfg


def cmd_generate(args) -> int:
    jobset, report = generate(_edge_config(args))
    _write(jobfile.dumps(jobset, args.format), args.output)
    print(f"# H={float(report.H):.4f} heavy_ratio="
          + ",".join(f"{float(r):.3f}" for r in report.heavy_ratio), file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    jobset = _load_jobset(args.file)
    mode = args.mode
    preemptive = mode.stage_preemptive(jobset.num_stages)
    if args.method == "dcmp":
        trace = dcmp_trace(jobset, preemptive)
    else:
        if args.method == "order":
            prio = PriorityOrdering.from_order(_order_or_identity(jobset, args.order))
            dispatch = "ordering"
        else:
            out = analyze(jobset, args.method, mode, budget=args.budget)
            if out["status"] != FEASIBLE:
                print(f"{args.method} found no feasible assignment ({out['status']})",
                      file=sys.stderr)
                return 1 if args.check else 0
            if out["order"] is not None:
                prio, dispatch = PriorityOrdering.from_order(out["order"]), "ordering"
            else:
                prio, dispatch = PairwiseAssignment.from_list(out["pairwise"]), "pairwise"
        trace = simulate(jobset, prio, SimConfig(preemptive, dispatch))
    text = trace.completion_table(jobset)
    if args.trace:
        text = trace.to_text() + text
    _write(text, args.output)
    missed = any(d > job.deadline for d, job in zip(trace.delays(jobset), jobset.jobs))
    return 1 if args.check and missed else 0


def _sweep(args, runner) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.cases is not None:
        spec = replace(spec, cases=args.cases)
    rows = runner(spec)
    _write(to_csv(rows, spec.timing), args.output or spec.output)
    return 0


def cmd_sweep(args) -> int:
    return _sweep(args, run_experiment)


def cmd_admit(args) -> int:
    return _sweep(args, run_admission)


def cmd_export_lp(args) -> int:
    jobset = _load_jobset(args.file)
    _write(export_lp(jobset, args.mode), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="msmrsched",
                                description="Fixed-priority analysis for multi-stage pipelines.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mode_default="eq6"):
        sp.add_argument("--mode", type=parse_mode, default=parse_mode(mode_default),
                        help="bound mode: eq1..eq6, edge, or a full mode name")
        sp.add_argument("-o", "--output", help="output file (default stdout)")

    a = sub.add_parser("analyze", help="bounds and priority assignment for an instance file")
    a.add_argument("file")
    a.add_argument("--method", choices=ANALYZE_METHODS, default="bound")
    a.add_argument("--order", type=parse_order, help="ordering for --method bound, highest first")
    a.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="node budget for opt")
    a.add_argument("--json", action="store_true", help="machine-readable report")
    a.add_argument("--check", action="store_true", help="exit 1 when infeasible")
    common(a)
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("generate", help="generate an edge workload instance")
    g.add_argument("--config", help="EdgeConfig JSON file")
    g.add_argument("--seed", type=int)
    g.add_argument("--beta")
    g.add_argument("--gamma")
    g.add_argument("--num-jobs", dest="num_jobs", type=int)
    g.add_argument("--num-aps", dest="num_aps", type=int)
    g.add_argument("--num-servers", dest="num_servers", type=int)
    g.add_argument("--format", choices=("text", "json"), default="text")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="simulate an instance under a priority assignment")
    s.add_argument("file")
    s.add_argument("--method", choices=SIMULATE_METHODS, default="order")
    s.add_argument("--order", type=parse_order)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--trace", action="store_true", help="print every event before the table")
    s.add_argument("--check", action="store_true", help="exit 1 when a deadline is missed")
    common(s)
    s.set_defaults(func=cmd_simulate)

    for name, func, text in (("sweep", cmd_sweep, "acceptance-ratio sweep to CSV"),
                             ("admit", cmd_admit, "admission-control sweep to CSV")):
        w = sub.add_parser(name, help=text)
        w.add_argument("spec", help="experiment spec JSON file")
        w.add_argument("--cases", type=int, help="override cases per point")
        w.add_argument("-o", "--output")
        w.set_defaults(func=func)

    e = sub.add_parser("export-lp", help="write the pairwise-assignment program in LP format")
    e.add_argument("file")
    common(e)
    e.set_defaults(func=cmd_export_lp)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except jobfile.ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
    except (UsageError, ModeError, GenerationError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
