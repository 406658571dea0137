"""Core domain types for RCPSP feasibility instances.

Everything else in the package is built on the types here: tasks,
resources with downtime calendars, precedence edges, disjunctive
(no-overlap) pairs, and the instance bundle that ties them together with
provenance metadata.

Time is discrete (non-negative integers) and a running task occupies the
half-open interval [start, start + duration), so back-to-back tasks are
legal.  Downtime windows are half-open for the same reason.  All types
are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

INSTANCE_FORMAT = "rcpsp-instance/1"


class Phase(str, Enum):
    PHASE_I = "phase1"
    PHASE_IIA = "phase2a"
    PHASE_IIB = "phase2b"


class CycleError(ValueError):
    """The precedence edge set contains a cycle; carries one witness cycle."""

    def __init__(self, cycle: list[str]):
        super().__init__("precedence cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class InvalidInstance(ValueError):
    """A structural invariant of the instance data is violated."""


@dataclass(frozen=True)
class TaskSpec:
    """One task: fixed duration, per-resource demands, optional window.

    `release` is the earliest admissible start, `deadline` the latest
    admissible finish.  A task carrying both must fit between them on its
    own, otherwise the instance could never be scheduled.
    """

    id: str
    duration: int
    demands: dict[str, int] = field(default_factory=dict)
    release: int | None = None
    deadline: int | None = None

    def __post_init__(self):
        if self.duration < 1:
            raise InvalidInstance(f"task {self.id}: duration must be >= 1")
        for rid, q in self.demands.items():
            if q < 0:
                raise InvalidInstance(f"task {self.id}: negative demand on {rid}")
        if self.release is not None and self.release < 0:
            raise InvalidInstance(f"task {self.id}: negative release")
        if self.deadline is not None and self.deadline < 1:
            raise InvalidInstance(f"task {self.id}: deadline must be >= 1")
        if (
            self.release is not None
            and self.deadline is not None
            and self.release + self.duration > self.deadline
        ):
            raise InvalidInstance(
                f"task {self.id}: window [{self.release}, {self.deadline}] "
                f"cannot hold duration {self.duration}"
            )


@dataclass(frozen=True)
class ResourceSpec:
    """A renewable resource with integer capacity and downtime calendar.

    Downtimes are half-open [a, b) intervals during which the effective
    capacity is zero.  They are normalised at construction: sorted,
    validated (a < b) and overlapping/adjacent windows merged.
    """

    id: str
    capacity: int
    downtimes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.capacity < 1:
            raise InvalidInstance(f"resource {self.id}: capacity must be >= 1")
        merged: list[tuple[int, int]] = []
        for a, b in sorted(self.downtimes):
            if a < 0 or a >= b:
                raise InvalidInstance(
                    f"resource {self.id}: bad downtime interval [{a}, {b})"
                )
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        object.__setattr__(self, "downtimes", tuple(merged))


def effective_capacity(resource: ResourceSpec, t: int) -> int:
    """Capacity available at time step t: zero inside any downtime window."""
    for a, b in resource.downtimes:
        if a <= t < b:
            return 0
        if t < a:
            break
    return resource.capacity


@dataclass(frozen=True)
class PrecedenceEdge:
    pred: str
    succ: str

    def __post_init__(self):
        if self.pred == self.succ:
            raise InvalidInstance(f"self-loop precedence edge on {self.pred}")


@dataclass(frozen=True)
class DisjunctivePair:
    """Unordered no-overlap pair, stored canonically (lexicographic)."""

    a: str
    b: str

    def __post_init__(self):
        if self.a == self.b:
            raise InvalidInstance(f"disjunctive pair of {self.a} with itself")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class InstanceMeta:
    """Provenance of a generated instance.

    `level` is the number of sampled non-redundant cross-layer edges (the
    difficulty dial), `seed` the 64-bit sub-seed the instance was drawn
    from, and `layer_of` maps every task id to its 0-based layer index.
    `rack_count` is set only for data-center instances.
    """

    phase: Phase
    layer_count: int
    level: int
    instance_index: int
    seed: int
    layer_of: dict[str, int]
    rack_count: int | None = None

    def __post_init__(self):
        if self.level < 1:
            raise InvalidInstance("meta.level must be >= 1")
        if not 0 <= self.instance_index < 10:
            raise InvalidInstance("meta.instance_index must be in [0, 10)")


@dataclass(frozen=True)
class Instance:
    """A full RCPSP feasibility instance.

    Validated at construction: unique ids, resolvable cross references,
    acyclic precedence, demands within capacity, and a horizon no smaller
    than any window requires.
    """

    tasks: list[TaskSpec]
    resources: list[ResourceSpec]
    edges: list[PrecedenceEdge]
    disjunctives: list[DisjunctivePair]
    horizon: int
    meta: InstanceMeta

    def __post_init__(self):
        object.__setattr__(self, "_task_map", {t.id: t for t in self.tasks})
        object.__setattr__(self, "_resource_map", {r.id: r for r in self.resources})
        self.validate()

    def task(self, tid: str) -> TaskSpec:
        return self._task_map[tid]

    def resource(self, rid: str) -> ResourceSpec:
        return self._resource_map[rid]

    @property
    def task_ids(self) -> list[str]:
        return [t.id for t in self.tasks]

    def validate(self) -> None:
        if len(self._task_map) != len(self.tasks):
            raise InvalidInstance("duplicate task ids")
        if len(self._resource_map) != len(self.resources):
            raise InvalidInstance("duplicate resource ids")
        if self.horizon < 1:
            raise InvalidInstance("horizon must be >= 1")
        for t in self.tasks:
            for rid, q in t.demands.items():
                res = self._resource_map.get(rid)
                if res is None:
                    raise InvalidInstance(f"task {t.id} demands unknown resource {rid}")
                if q > res.capacity:
                    raise InvalidInstance(
                        f"task {t.id} demands {q} of {rid} (capacity {res.capacity})"
                    )
            if t.release is not None and t.release + t.duration > self.horizon:
                raise InvalidInstance(f"task {t.id} cannot finish before the horizon")
            if t.deadline is not None and t.deadline > self.horizon:
                raise InvalidInstance(f"task {t.id} deadline exceeds the horizon")
        for e in self.edges:
            if e.pred not in self._task_map or e.succ not in self._task_map:
                raise InvalidInstance(f"edge {e.pred}->{e.succ} references unknown task")
        for d in self.disjunctives:
            if d.a not in self._task_map or d.b not in self._task_map:
                raise InvalidInstance(f"pair ({d.a}, {d.b}) references unknown task")
        missing = [tid for tid in self._task_map if tid not in self.meta.layer_of]
        if missing:
            raise InvalidInstance(f"meta.layer_of misses tasks: {missing}")
        topological_order(self)  # raises CycleError on a cycle


def topological_order(instance: Instance) -> list[str]:
    """Kahn's algorithm over the precedence edges.

    Returns an order in which every predecessor precedes its successors
    (stable: ties broken by task list order).  Raises CycleError carrying
    the ids of one cycle if the edge set is cyclic.
    """
    ids = instance.task_ids
    indeg = {tid: 0 for tid in ids}
    succs: dict[str, list[str]] = {tid: [] for tid in ids}
    for e in instance.edges:
        succs[e.pred].append(e.succ)
        indeg[e.succ] += 1
    ready = [tid for tid in ids if indeg[tid] == 0]
    order: list[str] = []
    while ready:
        tid = ready.pop(0)
        order.append(tid)
        for nxt in succs[tid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    if len(order) == len(ids):
        return order
    remaining = {tid for tid in ids if tid not in set(order)}
    raise CycleError(_find_cycle(remaining, succs))


def _find_cycle(nodes: set[str], succs: dict[str, list[str]]) -> list[str]:
    # Every node left after Kahn's sits on or feeds a cycle; walk until repeat.
    start = sorted(nodes)[0]
    seen: dict[str, int] = {}
    path: list[str] = []
    cur = start
    while cur not in seen:
        seen[cur] = len(path)
        path.append(cur)
        cur = next(s for s in succs[cur] if s in nodes)
    return path[seen[cur]:]


@dataclass(frozen=True)
class Schedule:
    """A trusted start-time assignment (e.g. a solver witness)."""

    starts: dict[str, int]


@dataclass(frozen=True)
class ScheduleEntry:
    """One parsed line of an agent's schedule array."""

    task: str
    start_time: int
    end_time: int
    resources: tuple[str, ...] = ()


@dataclass(frozen=True)
class CandidateSchedule:
    """Parsed but untrusted agent output.

    No semantic invariants are enforced here: duplicated tasks, bogus
    times and wrong resource claims all pass through so the verifier can
    report them.
    """

    entries: list[ScheduleEntry]
    claimed_makespan: int | None
    raw_text: str


# ---------------------------------------------------------------------------
# Instance interchange format (one self-describing JSON document per
# instance, optionally bundling the certification witness).
# ---------------------------------------------------------------------------


def instance_to_dict(instance: Instance, witness: Schedule | None = None) -> dict:
    return {
        "format": INSTANCE_FORMAT,
        "tasks": [
            {
                "id": t.id,
                "duration": t.duration,
                "demands": dict(t.demands),
                "release": t.release,
                "deadline": t.deadline,
            }
            for t in instance.tasks
        ],
        "resources": [
            {
                "id": r.id,
                "capacity": r.capacity,
                "downtimes": [[a, b] for a, b in r.downtimes],
            }
            for r in instance.resources
        ],
        "edges": [[e.pred, e.succ] for e in instance.edges],
        "disjunctives": [[d.a, d.b] for d in instance.disjunctives],
        "horizon": instance.horizon,
        "meta": {
            "phase": instance.meta.phase.value,
            "layer_count": instance.meta.layer_count,
            "level": instance.meta.level,
            "instance_index": instance.meta.instance_index,
            "seed": instance.meta.seed,
            "layer_of": dict(instance.meta.layer_of),
            "rack_count": instance.meta.rack_count,
        },
        "witness": None if witness is None else dict(witness.starts),
    }


def instance_from_dict(doc: dict) -> tuple[Instance, Schedule | None]:
    if doc.get("format") != INSTANCE_FORMAT:
        raise InvalidInstance(f"unsupported instance format: {doc.get('format')!r}")
    meta = doc["meta"]
    instance = Instance(
        tasks=[
            TaskSpec(
                id=t["id"],
                duration=t["duration"],
                demands=dict(t["demands"]),
                release=t["release"],
                deadline=t["deadline"],
            )
            for t in doc["tasks"]
        ],
        resources=[
            ResourceSpec(
                id=r["id"],
                capacity=r["capacity"],
                downtimes=tuple((a, b) for a, b in r["downtimes"]),
            )
            for r in doc["resources"]
        ],
        edges=[PrecedenceEdge(p, s) for p, s in doc["edges"]],
        disjunctives=[DisjunctivePair(a, b) for a, b in doc["disjunctives"]],
        horizon=doc["horizon"],
        meta=InstanceMeta(
            phase=Phase(meta["phase"]),
            layer_count=meta["layer_count"],
            level=meta["level"],
            instance_index=meta["instance_index"],
            seed=meta["seed"],
            layer_of=dict(meta["layer_of"]),
            rack_count=meta.get("rack_count"),
        ),
    )
    witness = doc.get("witness")
    return instance, None if witness is None else Schedule(starts=dict(witness))


def dumps_instance(instance: Instance, witness: Schedule | None = None) -> str:
    return json.dumps(instance_to_dict(instance, witness), indent=2) + "\n"


def loads_instance(text: str) -> tuple[Instance, Schedule | None]:
    return instance_from_dict(json.loads(text))


def save_instance(path: str | Path, instance: Instance, witness: Schedule | None = None) -> None:
    Path(path).write_text(dumps_instance(instance, witness), encoding="utf-8")


def load_instance(path: str | Path) -> tuple[Instance, Schedule | None]:
    return loads_instance(Path(path).read_text(encoding="utf-8"))
