"""Priority assignment: Audsley-style ordering, deadline-monotonic pairs and repair."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

from .dca import BoundMode, DelayBound, ModeError, bound_for, check_mode
from .model import JobSet, competitor_sets
from .priorities import (
    PairwiseAssignment,
    PriorityOrdering,
    check_pairwise_mode,
    pairwise_bound,
)

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"


@dataclass
class AssignmentOutcome:
    status: str
    order: list[int] | None = None  # accepted job ids, highest priority first
    pairwise: PairwiseAssignment | None = None
    bounds: dict[int, DelayBound] = field(default_factory=dict)
    accepted: list[int] = field(default_factory=list)
    rejected: list[int] = field(default_factory=list)  # in rejection order
    flips: list[tuple[int, int]] = field(default_factory=list)  # (new higher, new lower)
    nodes: int = 0
    delays: dict[int, int] = field(default_factory=dict)  # simulated, where applicable

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    @property
    def ordering(self) -> PriorityOrdering | None:
        if self.order is None or sorted(self.order) != list(range(len(self.order))):
            return None
        return PriorityOrdering.from_order(self.order)


def sdca(jobset: JobSet, i: int, higher: Iterable[int], lower: Iterable[int],
         mode: BoundMode, universe: Iterable[int] | None = None) -> bool:
    """True iff job ``i``'s delay bound fits its deadline for these sets."""
    b = bound_for(jobset, i, higher, lower, mode, universe)
    return not b.saturated and b.total <= jobset.jobs[i].deadline


def _require_opa(jobset: JobSet, mode: BoundMode) -> None:
    check_mode(jobset, mode)
    if not mode.opa_compatible:
        raise ModeError(f"{mode.value} is not OPA-compatible")


def _audsley(jobset: JobSet, mode: BoundMode, admission: bool) -> AssignmentOutcome:
    unassigned = list(range(jobset.n))
    assigned: list[int] = []  # lowest priority first
    rejected: list[int] = []
    active = set(unassigned)
    while unassigned:
        for i in unassigned:
            if sdca(jobset, i, (k for k in unassigned if k != i), assigned, mode, active):
                unassigned.remove(i)
                assigned.append(i)
                break
        else:
            if not admission:
                return AssignmentOutcome(INFEASIBLE, accepted=sorted(assigned))
            worst = max(
                unassigned,
                key=lambda i: (
                    bound_for(jobset, i, (k for k in unassigned if k != i), assigned, mode,
                              active).total - jobset.jobs[i].deadline,
                    -i,
                ),
            )
            log.debug("rejecting job %d with %d unassigned", worst, len(unassigned))
            unassigned.remove(worst)
            active.discard(worst)
            rejected.append(worst)
    order = assigned[::-1]
    bounds = {
        i: bound_for(jobset, i, order[:pos], order[pos + 1:], mode, active)
        for pos, i in enumerate(order)
    }
    return AssignmentOutcome(FEASIBLE, order=order, bounds=bounds, accepted=sorted(order),
                             rejected=rejected)


def opdca(jobset: JobSet, mode: BoundMode) -> AssignmentOutcome:
    """Optimal priority ordering: fill levels from lowest up with the first feasible job."""
    _require_opa(jobset, mode)
    return _audsley(jobset, mode, admission=False)


def opdca_admission(jobset: JobSet, mode: BoundMode) -> AssignmentOutcome:
    """As :func:`opdca`, but a stuck level drops the job with the worst lateness and retries."""
    _require_opa(jobset, mode)
    return _audsley(jobset, mode, admission=True)


def dm_pairwise(jobset: JobSet) -> PairwiseAssignment:
    pa = PairwiseAssignment()
    for i, k in competitor_sets(jobset).pairs():
        if jobset.jobs[i].deadline <= jobset.jobs[k].deadline:
            pa.set(i, k)
        else:
            pa.set(k, i)
    return pa


def _pairwise_outcome(jobset, pa, bounds, flips=()) -> AssignmentOutcome:
    ok = all(b.total <= jobset.jobs[b.job].deadline and not b.saturated for b in bounds)
    return AssignmentOutcome(
        FEASIBLE if ok else INFEASIBLE,
        pairwise=pa,
        bounds={b.job: b for b in bounds},
        accepted=list(range(jobset.n)) if ok else [],
        flips=list(flips),
    )


def dm(jobset: JobSet, mode: BoundMode) -> AssignmentOutcome:
    """Deadline-monotonic pairwise assignment checked against the bounds, no repair."""
    check_pairwise_mode(jobset, mode)
    pa = dm_pairwise(jobset)
    return _pairwise_outcome(jobset, pa, [pairwise_bound(jobset, pa, i, mode)
                                          for i in range(jobset.n)])


def dmr(jobset: JobSet, mode: BoundMode) -> AssignmentOutcome:
    """Deadline-monotonic pairwise assignment followed by slack-ordered repair flips.

    Violating jobs are visited in ascending id. For job ``i`` the candidates are
    its higher-priority competitors with strictly positive slack, most slack
    first; a flip is kept only if the demoted job still meets its deadline.
    Flips are permanent for the rest of the run.
    """
    check_pairwise_mode(jobset, mode)
    comp = competitor_sets(jobset)
    deadline = [job.deadline for job in jobset.jobs]
    pa = dm_pairwise(jobset)
    delta = [pairwise_bound(jobset, pa, i, mode) for i in range(jobset.n)]
    flips: list[tuple[int, int]] = []

    def late(i: int) -> bool:
        return delta[i].saturated or delta[i].total > deadline[i]

    for i in range(jobset.n):
        if not late(i):
            continue
        candidates = [
            k for k in comp.all[i]
            if pa.winner(i, k) == k and not delta[k].saturated and delta[k].total < deadline[k]
        ]
        candidates.sort(key=lambda k: (-(deadline[k] - delta[k].total), k))
        for k in candidates:
            pa.set(i, k)
            demoted = pairwise_bound(jobset, pa, k, mode)
            if demoted.saturated or demoted.total > deadline[k]:
                pa.set(k, i)
                continue
            delta[k] = demoted
            delta[i] = pairwise_bound(jobset, pa, i, mode)
            flips.append((i, k))
            if not late(i):
                break
        if late(i):
            out = _pairwise_outcome(jobset, pa, delta, flips)
            out.status = INFEASIBLE
            out.accepted = []
            return out
    return _pairwise_outcome(jobset, pa, delta, flips)


def _lift(out: AssignmentOutcome, keep: list[int]) -> AssignmentOutcome:
    """Map an outcome computed on a renumbered subset back to original ids."""
    def remap(b: DelayBound) -> DelayBound:
        return DelayBound(keep[b.job], b.total,
                          tuple((keep[k], v) for k, v in b.job_additive),
                          b.stage_additive, b.lower_blocking, b.saturated)

    pa = None
    if out.pairwise is not None:
        pa = PairwiseAssignment.from_list([[keep[h], keep[l]] for h, l in out.pairwise.edges()])
    return AssignmentOutcome(
        out.status,
        order=None if out.order is None else [keep[i] for i in out.order],
        pairwise=pa,
        bounds={keep[i]: remap(b) for i, b in out.bounds.items()},
        accepted=[keep[i] for i in out.accepted],
        flips=[(keep[a], keep[b]) for a, b in out.flips],
        nodes=out.nodes,
    )


def dmr_admission(jobset: JobSet, mode: BoundMode) -> AssignmentOutcome:
    """Run DMR; whenever it gives up, drop the job with the worst lateness and rerun."""
    check_pairwise_mode(jobset, mode)
    return _restart_admission(jobset, mode, dmr)


def _restart_admission(jobset: JobSet, mode: BoundMode, solve) -> AssignmentOutcome:
    active = list(range(jobset.n))
    rejected: list[int] = []
    while True:
        sub, keep = jobset.subset(active)
        out = solve(sub, mode)
        if out.feasible:
            lifted = _lift(out, keep)
            lifted.rejected = rejected
            return lifted
        worst = max(out.bounds.values(),
                    key=lambda b: (b.total - sub.jobs[b.job].deadline, -b.job)).job
        log.debug("admission rejects job %d", keep[worst])
        rejected.append(keep[worst])
        active.remove(keep[worst])


def dm_admission(jobset: JobSet, mode: BoundMode) -> AssignmentOutcome:
    """Drop the job with the worst lateness under DM until the rest is feasible."""
    check_pairwise_mode(jobset, mode)
    return _restart_admission(jobset, mode, dm)
