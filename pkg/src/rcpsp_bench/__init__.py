"""Solver-certified RCPSP feasibility benchmark toolkit."""

from .model import (
    CandidateSchedule,
    CycleError,
    DisjunctivePair,
    Instance,
    InstanceMeta,
    InvalidInstance,
    Phase,
    PrecedenceEdge,
    ResourceSpec,
    Schedule,
    ScheduleEntry,
    TaskSpec,
    effective_capacity,
    load_instance,
    save_instance,
    topological_order,
)
from .solver import SolveOutcome, Status, brute_force_oracle, compute_horizon, solve_feasibility
from .verifier import Category, Label, ViolationReport, classify, verify, verify_schedule

__version__ = "0.1.0"
