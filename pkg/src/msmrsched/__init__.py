"""Delay-composition bounds and priority assignment for multi-stage multi-resource pipelines."""

from .assign import (
    FEASIBLE,
    INFEASIBLE,
    UNKNOWN,
    AssignmentOutcome,
    dm,
    dm_admission,
    dm_pairwise,
    dmr,
    dmr_admission,
    opdca,
    opdca_admission,
    sdca,
)
from .dca import BoundMode, DelayBound, EdgeFlags, ModeError, bound, bound_edge, bound_for
from .jobfile import ParseError
from .model import Job, JobSet, Pipeline, competitor_sets, make_jobset, segment_profile
from .opt import build_program, export_lp, solve_exact
from .priorities import PairwiseAssignment, PriorityOrdering, pairwise_bound, pairwise_bounds
from .sim import SimConfig, SimTrace, dcmp, simulate, virtual_deadlines
from .workload import EdgeConfig, HeavinessReport, generate, heaviness

__all__ = [
    "FEASIBLE", "INFEASIBLE", "UNKNOWN", "AssignmentOutcome", "dm", "dm_admission",
    "dm_pairwise", "dmr", "dmr_admission", "opdca", "opdca_admission", "sdca",
    "BoundMode", "DelayBound", "EdgeFlags", "ModeError", "bound", "bound_edge", "bound_for",
    "ParseError", "Job", "JobSet", "Pipeline", "competitor_sets", "make_jobset",
    "segment_profile", "build_program", "export_lp", "solve_exact", "PairwiseAssignment",
    "PriorityOrdering", "pairwise_bound", "pairwise_bounds", "SimConfig", "SimTrace", "dcmp",
    "simulate", "virtual_deadlines", "EdgeConfig", "HeavinessReport", "generate", "heaviness",
]
