"""Render instances as natural-language scheduling prompts; parse replies.

Two templates: the generic synthetic one (task/resource/no-overlap/
precedence bullet lists) and the data-center migration narrative.
Rendering is deterministic and follows the instance's stored element
order, so prompt snapshots are stable.  Parsing accepts arbitrary text
and returns either a CandidateSchedule or a ParseFailure value; it never
raises on malformed input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .model import (
    CandidateSchedule,
    Instance,
    Phase,
    ResourceSpec,
    Schedule,
    ScheduleEntry,
    TaskSpec,
)


class PromptKind(str, Enum):
    SYNTHETIC_MCI = "synthetic_mci"
    DATACENTER = "datacenter"


class TemplateMismatch(ValueError):
    """Instance phase is incompatible with the requested template."""


@dataclass(frozen=True)
class ParseFailure:
    reason: str


OUTPUT_SCHEMA_BLOCK = """Please provide your solution in JSON format with the following structure:
{
  "makespan": <total_duration>,
  "schedule": [
    {
      "task": "<task_id>",
      "start_time": <start_time>,
      "end_time": <end_time>,
      "resources": ["<resource_id>"]
    }
  ]
}"""


def default_prompt_kind(instance: Instance) -> PromptKind:
    if instance.meta.phase is Phase.PHASE_IIB:
        return PromptKind.DATACENTER
    return PromptKind.SYNTHETIC_MCI


def render_prompt(instance: Instance, kind: PromptKind) -> str:
    if kind is PromptKind.SYNTHETIC_MCI:
        if instance.meta.phase is Phase.PHASE_IIB:
            raise TemplateMismatch("data-center instances use the datacenter template")
        return _render_synthetic(instance)
    if kind is PromptKind.DATACENTER:
        if instance.meta.phase is not Phase.PHASE_IIB:
            raise TemplateMismatch(
                f"{instance.meta.phase.value} instances use the synthetic template"
            )
        return _render_datacenter(instance)
    raise TemplateMismatch(f"unknown template kind {kind!r}")


# ---------------------------------------------------------------------------
# Synthetic template
# ---------------------------------------------------------------------------


def _synthetic_task_line(task: TaskSpec, preds: list[str]) -> str:
    parts = [f"- {task.id}: Duration {task.duration} time units"]
    if task.demands:
        parts.append("Requires: " + ", ".join(task.demands))
    if preds:
        parts.append("Depends on: " + ", ".join(preds))
    if task.release is not None:
        parts.append(f"Cannot start before time {task.release}")
    if task.deadline is not None:
        parts.append(f"Must finish by time {task.deadline}")
    return ", ".join(parts)


def _synthetic_resource_line(res: ResourceSpec) -> str:
    line = f"- {res.id}: Capacity {res.capacity} (can handle {res.capacity} tasks simultaneously)"
    if res.downtimes:
        line += ", Downtime windows: " + ", ".join(
            f"unavailable {a}-{b}" for a, b in res.downtimes
        )
    return line


def _render_synthetic(instance: Instance) -> str:
    preds_of: dict[str, list[str]] = {t.id: [] for t in instance.tasks}
    for e in instance.edges:
        preds_of[e.succ].append(e.pred)

    sections = [
        "You are a project scheduler tasked with creating a feasible schedule "
        "for a resource-constrained project scheduling problem.\n"
    ]
    sections.append(
        "\n".join(_synthetic_task_line(t, preds_of[t.id]) for t in instance.tasks)
    )
    if instance.resources:
        sections.append(
            "\n".join(_synthetic_resource_line(r) for r in instance.resources)
        )
    if instance.disjunctives:
        sections.append(
            "\n".join(
                f"- {d.a} and {d.b} cannot run simultaneously"
                for d in instance.disjunctives
            )
        )
    if instance.edges:
        sections.append(
            "\n".join(
                f"- {e.pred} must finish before {e.succ} can start"
                for e in instance.edges
            )
        )
    sections.append(
        "Create a feasible schedule that minimizes the total project duration "
        "(makespan) while respecting all constraints."
    )
    sections.append(OUTPUT_SCHEMA_BLOCK)
    return "\n\n".join(sections) + "\n"


# ---------------------------------------------------------------------------
# Data-center migration template
# ---------------------------------------------------------------------------


def _rack_of(tid: str) -> int:
    return int(tid.split("_")[1])


def _datacenter_task_line(task: TaskSpec) -> str:
    parts = [f"  - {task.id}: {task.duration} minutes"]
    if task.demands:
        parts.append("Requires: " + ", ".join(task.demands))
    if task.release is not None:
        parts.append(f"Cannot start before minute {task.release}")
    if task.deadline is not None:
        parts.append(f"Must complete by minute {task.deadline}")
    return ", ".join(parts)


def _datacenter_resource_line(res: ResourceSpec) -> str:
    if res.capacity == 1:
        line = f"- {res.id}: Can handle 1 task at a time"
    else:
        line = f"- {res.id}: Can handle {res.capacity} tasks simultaneously"
    if res.downtimes:
        line += " (Downtime: " + ", ".join(
            f"unavailable minutes {a}-{b}" for a, b in res.downtimes
        ) + ")"
    return line


def _shared_resources(instance: Instance, a: str, b: str) -> list[str]:
    da, db = instance.task(a).demands, instance.task(b).demands
    shared = [r.id for r in instance.resources if r.id in da and r.id in db]
    # capacity-1 equipment first: that is the binding conflict
    return sorted(shared, key=lambda rid: instance.resource(rid).capacity != 1)


def _render_datacenter(instance: Instance) -> str:
    racks = instance.meta.rack_count
    stage_by_layer: dict[int, str] = {}
    for t in instance.tasks:
        stage_by_layer.setdefault(
            instance.meta.layer_of[t.id], t.id.split("_", 2)[2].capitalize()
        )
    stage_flow = " → ".join(stage_by_layer[i] for i in sorted(stage_by_layer))

    sections = [
        f"You are managing a critical data center migration from Facility 1 to "
        f"Facility 2. This migration involves {racks} server racks that must be "
        f"carefully moved while minimizing total downtime."
    ]
    sections.append(
        "MIGRATION OVERVIEW:\n"
        f"- Number of racks: {racks}\n"
        f"- Total tasks: {len(instance.tasks)}\n"
        f"- Migration phases per rack: {stage_flow}\n"
        f"- Complexity level: {instance.meta.level}"
    )

    blocks = ["MIGRATION TASKS:\nEach rack must go through the following sequence:"]
    for rack in range(1, racks + 1):
        lines = [f"Rack_{rack}:"]
        lines.extend(
            _datacenter_task_line(t)
            for t in sorted(
                (t for t in instance.tasks if _rack_of(t.id) == rack),
                key=lambda t: instance.meta.layer_of[t.id],
            )
        )
        blocks.append("\n".join(lines))
    sections.append("\n\n".join(blocks))

    sections.append(
        "AVAILABLE RESOURCES:\n"
        + "\n".join(_datacenter_resource_line(r) for r in instance.resources)
    )

    inter_rack = [e for e in instance.edges if _rack_of(e.pred) != _rack_of(e.succ)]
    sections.append(
        "CRITICAL INTER-RACK DEPENDENCIES:\n"
        "The following tasks have dependencies across racks:\n"
        + "\n".join(f"- {e.pred} must complete before {e.succ}" for e in inter_rack)
    )

    conflict_lines = []
    for d in instance.disjunctives:
        shared = _shared_resources(instance, d.a, d.b)
        note = f" (both need {', '.join(shared)})" if shared else ""
        conflict_lines.append(f"- {d.a} and {d.b}{note}")
    sections.append(
        "EQUIPMENT CONFLICTS:\n"
        "The following task pairs cannot run simultaneously due to shared equipment:\n"
        + "\n".join(conflict_lines)
    )

    sections.append(
        "PRECEDENCE CONSTRAINTS:\n"
        + "\n".join(
            f"- {e.pred} must finish before {e.succ} can start" for e in instance.edges
        )
    )

    sections.append(
        "CONSTRAINTS:\n"
        f"1. Each rack's tasks must follow the sequence: {stage_flow}\n"
        "2. Tasks require specific crews and equipment with limited capacity\n"
        "3. Resources have scheduled downtime windows (breaks, maintenance)\n"
        "4. Some tasks have time windows (earliest start, latest finish)\n"
        "5. Tasks sharing limited equipment cannot run simultaneously\n"
        "6. Inter-rack dependencies must be respected"
    )
    sections.append(
        "OBJECTIVE:\n"
        "Create a migration schedule that completes all tasks in a feasible time "
        "while respecting all constraints."
    )
    sections.append(OUTPUT_SCHEMA_BLOCK)
    return "\n\n".join(sections) + "\n"


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------


def _as_int(value) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return None


def _candidate_from(obj: dict, raw: str) -> CandidateSchedule | ParseFailure:
    schedule = obj["schedule"]
    if not isinstance(schedule, list):
        return ParseFailure("'schedule' is not an array")
    entries: list[ScheduleEntry] = []
    for pos, item in enumerate(schedule):
        if not isinstance(item, dict):
            return ParseFailure(f"schedule entry {pos} is not an object")
        task = item.get("task")
        if not isinstance(task, str):
            return ParseFailure(f"schedule entry {pos} has no task id")
        start = _as_int(item.get("start_time"))
        end = _as_int(item.get("end_time"))
        if start is None or end is None:
            return ParseFailure(f"schedule entry {pos} has non-integer times")
        resources = item.get("resources")
        claimed = (
            tuple(r for r in resources if isinstance(r, str))
            if isinstance(resources, list)
            else ()
        )
        entries.append(ScheduleEntry(task, start, end, claimed))
    return CandidateSchedule(
        entries=entries,
        claimed_makespan=_as_int(obj.get("makespan")),
        raw_text=raw,
    )


def parse_response(raw: str) -> CandidateSchedule | ParseFailure:
    """Extract the first JSON object with a "schedule" array from raw text.

    Tolerates surrounding prose and code fences; numeric fields may be
    integers or integral-valued decimals; extra fields are ignored.
    Duplicate task entries are kept verbatim for the verifier to flag.
    """
    decoder = json.JSONDecoder()
    pos = raw.find("{")
    while pos != -1:
        try:
            obj, _ = decoder.raw_decode(raw, pos)
        except ValueError:
            obj = None
        if isinstance(obj, dict) and "schedule" in obj:
            return _candidate_from(obj, raw)
        pos = raw.find("{", pos + 1)
    return ParseFailure("no JSON object with a 'schedule' array found")


def format_response(instance: Instance, schedule: Schedule) -> str:
    """Format a witness the way agents are asked to answer.

    Round-trips through parse_response back to the exact same starts;
    used by the built-in agents and for replayable transcripts.
    """
    entries = []
    makespan = 0
    for t in instance.tasks:
        s = schedule.starts[t.id]
        makespan = max(makespan, s + t.duration)
        entries.append(
            {
                "task": t.id,
                "start_time": s,
                "end_time": s + t.duration,
                "resources": list(t.demands),
            }
        )
    return json.dumps({"makespan": makespan, "schedule": entries}, indent=2)
