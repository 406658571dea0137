"""Bit-exact schedule checking and the failure taxonomy.

This module is the single source of truth for "feasible": the solver,
the certification loop and the agent harness all route their schedules
through `verify` / `verify_schedule`.  All problems are reported as
data (violations), never raised.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .model import CandidateSchedule, Instance, Schedule, effective_capacity


class Category(str, Enum):
    PRECEDENCE = "precedence"
    RESOURCE_DOWNTIME = "resource_downtime"
    TEMPORAL = "temporal"
    DISJUNCTIVE = "disjunctive"
    STRUCTURAL = "structural"


class Label(str, Enum):
    FEASIBLE = "feasible"
    PRECEDENCE = "precedence"
    RESOURCE_DOWNTIME = "resource_downtime"
    TEMPORAL = "temporal"
    DISJUNCTIVE = "disjunctive"
    OTHER = "other"


@dataclass(frozen=True)
class Violation:
    category: Category
    message: str
    detail: dict = field(default_factory=dict)


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)
    parse_failed: bool = False
    parse_reason: str | None = None
    notes: list[str] = field(default_factory=list)
    label: Label = Label.FEASIBLE


def parse_failure_report(reason: str) -> ViolationReport:
    return ViolationReport(parse_failed=True, parse_reason=reason, label=Label.OTHER)


def classify(report: ViolationReport) -> Label:
    """Attribute one taxonomy label to a report.

    Clean reports are Feasible.  Parse failures and structural damage
    (missing/duplicated tasks, negative times, end != start + duration)
    go to Other.  Otherwise the category holding a strict majority of the
    violation count wins; mixed bags without a majority are Other.
    """
    if report.parse_failed:
        return Label.OTHER
    if not report.violations:
        return Label.FEASIBLE
    counts = Counter(v.category for v in report.violations)
    if counts.get(Category.STRUCTURAL):
        return Label.OTHER
    top_category, top = counts.most_common(1)[0]
    if 2 * top > sum(counts.values()):
        return Label(top_category.value)
    return Label.OTHER


def verify(instance: Instance, candidate: CandidateSchedule) -> ViolationReport:
    """Check an untrusted candidate schedule against the instance.

    Resource demands always come from the instance; the candidate's
    claimed resource lists are ignored.  A claimed makespan that differs
    from the scheduled span is noted but never affects the label.
    Durations likewise come from the instance, so an entry whose end
    disagrees with start + duration is flagged structurally and then
    judged on its [start, start + duration) interval.
    """
    report = ViolationReport()
    known = {t.id for t in instance.tasks}
    starts: dict[str, int] = {}
    seen: set[str] = set()
    for entry in candidate.entries:
        if entry.task not in known:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: unknown task {entry.task}",
                    {"task": entry.task, "kind": "unknown_task"},
                )
            )
            continue
        if entry.task in seen:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: task {entry.task} scheduled more than once",
                    {"task": entry.task, "kind": "duplicate_task"},
                )
            )
            continue  # first occurrence stays authoritative
        seen.add(entry.task)
        duration = instance.task(entry.task).duration
        if entry.start_time < 0:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: task {entry.task} starts at negative time "
                    f"{entry.start_time}",
                    {"task": entry.task, "kind": "negative_start"},
                )
            )
            continue
        if entry.end_time != entry.start_time + duration:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: task {entry.task} has end {entry.end_time} "
                    f"!= start {entry.start_time} + duration {duration}",
                    {"task": entry.task, "kind": "end_mismatch"},
                )
            )
        starts[entry.task] = entry.start_time
    for t in instance.tasks:
        if t.id not in seen:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: task {t.id} missing from the schedule",
                    {"task": t.id, "kind": "missing_task"},
                )
            )

    report.violations.extend(_constraint_violations(instance, starts))

    if candidate.claimed_makespan is not None and starts:
        span = max(s + instance.task(tid).duration for tid, s in starts.items())
        if candidate.claimed_makespan != span:
            report.notes.append(
                f"claimed makespan {candidate.claimed_makespan} != scheduled span {span}"
            )
    report.label = classify(report)
    return report


def verify_schedule(instance: Instance, schedule: Schedule) -> ViolationReport:
    """Check a trusted start assignment (witness path: no parsing involved)."""
    report = ViolationReport()
    starts: dict[str, int] = {}
    for tid, s in schedule.starts.items():
        if tid not in {t.id for t in instance.tasks}:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: unknown task {tid}",
                    {"task": tid, "kind": "unknown_task"},
                )
            )
        elif s < 0:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: task {tid} starts at negative time {s}",
                    {"task": tid, "kind": "negative_start"},
                )
            )
        else:
            starts[tid] = s
    for t in instance.tasks:
        if t.id not in schedule.starts:
            report.violations.append(
                Violation(
                    Category.STRUCTURAL,
                    f"Structural violation: task {t.id} missing from the schedule",
                    {"task": t.id, "kind": "missing_task"},
                )
            )
    report.violations.extend(_constraint_violations(instance, starts))
    report.label = classify(report)
    return report


def _constraint_violations(instance: Instance, starts: dict[str, int]) -> list[Violation]:
    """The four constraint checks over whichever tasks have a valid start.

    The resource scan runs over [0, max scheduled end) rather than the
    instance horizon, so a late-but-valid schedule is judged on its own
    span; deadlines still bind through the temporal check.
    """
    out: list[Violation] = []
    dur = {t.id: t.duration for t in instance.tasks}

    for e in instance.edges:
        if e.pred in starts and e.succ in starts:
            pred_end = starts[e.pred] + dur[e.pred]
            if starts[e.succ] < pred_end:
                out.append(
                    Violation(
                        Category.PRECEDENCE,
                        f"Precedence violation: {e.succ} starts at {starts[e.succ]} "
                        f"before {e.pred} finishes at {pred_end}",
                        {
                            "pred": e.pred,
                            "succ": e.succ,
                            "pred_end": pred_end,
                            "succ_start": starts[e.succ],
                        },
                    )
                )

    span = max((s + dur[tid] for tid, s in starts.items()), default=0)
    for r in instance.resources:
        used = [0] * span
        for tid, s in starts.items():
            q = instance.task(tid).demands.get(r.id, 0)
            if q:
                for t in range(s, s + dur[tid]):
                    used[t] += q
        for t in range(span):
            cap = effective_capacity(r, t)
            if used[t] > cap:
                out.append(
                    Violation(
                        Category.RESOURCE_DOWNTIME,
                        f"Resource capacity violation: {r.id} has {used[t]} tasks "
                        f"at time {t}, capacity is {cap}",
                        {"resource": r.id, "time": t, "usage": used[t], "capacity": cap},
                    )
                )

    for task in instance.tasks:
        s = starts.get(task.id)
        if s is None:
            continue
        if task.release is not None and s < task.release:
            out.append(
                Violation(
                    Category.TEMPORAL,
                    f"Temporal violation: {task.id} starts at {s} before its "
                    f"earliest start {task.release}",
                    {"task": task.id, "start": s, "release": task.release, "kind": "release"},
                )
            )
        if task.deadline is not None and s + task.duration > task.deadline:
            out.append(
                Violation(
                    Category.TEMPORAL,
                    f"Temporal violation: {task.id} ends at {s + task.duration} "
                    f"after its deadline {task.deadline}",
                    {
                        "task": task.id,
                        "end": s + task.duration,
                        "deadline": task.deadline,
                        "kind": "deadline",
                    },
                )
            )

    for d in instance.disjunctives:
        sa, sb = starts.get(d.a), starts.get(d.b)
        if sa is None or sb is None:
            continue
        if sa < sb + dur[d.b] and sb < sa + dur[d.a]:
            out.append(
                Violation(
                    Category.DISJUNCTIVE,
                    f"Disjunctive constraint violation: {d.a} and {d.b} overlap",
                    {"a": d.a, "b": d.b},
                )
            )
    return out
