from __future__ import annotations

from pathlib import Path
from random import Random

import pytest

from rcpsp_bench.model import (
    DisjunctivePair,
    Instance,
    InstanceMeta,
    Phase,
    PrecedenceEdge,
    ResourceSpec,
    TaskSpec,
)

GOLDEN = Path(__file__).parent / "golden"


def quick_instance(tasks, resources=(), edges=(), pairs=(), horizon=None,
                   phase=Phase.PHASE_IIA) -> Instance:
    """Small-instance builder for tests; horizon defaults to a safe bound."""
    tasks = list(tasks)
    ids = [t.id for t in tasks]
    if horizon is None:
        total = sum(t.duration for t in tasks)
        horizon = max(
            [1, total]
            + [(t.release or 0) + t.duration for t in tasks]
            + [t.deadline for t in tasks if t.deadline is not None]
            + [(t.release or 0) + total for t in tasks]
        )
    meta = InstanceMeta(
        phase=phase, layer_count=2, level=1, instance_index=0, seed=0,
        layer_of={tid: 0 for tid in ids},
    )
    return Instance(
        tasks=tasks,
        resources=list(resources),
        edges=[PrecedenceEdge(*e) for e in edges],
        disjunctives=[DisjunctivePair(*p) for p in pairs],
        horizon=horizon,
        meta=meta,
    )


def random_small_instance(rng: Random) -> Instance:
    """Mixed-axis random instance within the brute-force oracle's bounds.

    Durations, releases, downtimes and deadlines are capped so that the
    completeness horizon stays <= 40 for up to 6 tasks.
    """
    n = rng.randint(1, 6)
    durations = [rng.randint(1, 4) for _ in range(n)]
    ids = [f"Task_{i + 1}" for i in range(n)]
    resources = []
    for r in range(rng.randint(0, 2)):
        downtimes = ()
        if rng.random() < 0.5:
            a = rng.randint(0, 8)
            downtimes = ((a, a + rng.randint(1, 4)),)
        resources.append(ResourceSpec(f"Resource_{r + 1}", rng.randint(1, 2), downtimes))
    tasks = []
    for i in range(n):
        demands = {}
        for res in resources:
            if rng.random() < 0.5:
                demands[res.id] = rng.randint(1, res.capacity)
        release = rng.randint(0, 6) if rng.random() < 0.5 else None
        deadline = None
        if rng.random() < 0.5:
            lo = (release or 0) + durations[i]
            deadline = lo + rng.randint(0, 10)
        tasks.append(TaskSpec(ids[i], durations[i], demands, release, deadline))
    edges = [
        (ids[i], ids[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < 0.3
    ]
    pairs = [
        (ids[i], ids[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < 0.25
    ]
    return quick_instance(tasks, resources, edges, pairs)


def naive_feasible(instance: Instance, starts: dict[str, int]) -> bool:
    """Deliberately naive re-check of every rule, independent of the verifier."""
    if set(starts) != {t.id for t in instance.tasks}:
        return False
    if any(s < 0 for s in starts.values()):
        return False
    end = {t.id: starts[t.id] + t.duration for t in instance.tasks}
    for e in instance.edges:
        if starts[e.succ] < end[e.pred]:
            return False
    for t in instance.tasks:
        if t.release is not None and starts[t.id] < t.release:
            return False
        if t.deadline is not None and end[t.id] > t.deadline:
            return False
    span = max(end.values(), default=0)
    for r in instance.resources:
        for tt in range(span):
            cap = r.capacity
            for a, b in r.downtimes:
                if a <= tt < b:
                    cap = 0
            load = 0
            for task in instance.tasks:
                q = task.demands.get(r.id, 0)
                if q and starts[task.id] <= tt < end[task.id]:
                    load += q
            if load > cap:
                return False
    for d in instance.disjunctives:
        if starts[d.a] < end[d.b] and starts[d.b] < end[d.a]:
            return False
    return True


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: full acceptance-criteria suite (slow)"
    )
