"""Phase-configured instance generation with solver certification.

Each instance is drawn from a sub-seed that is a pure function of
(master seed, dataset name, level, index, attempt), so datasets are
byte-reproducible and parallel generation order cannot change the
output.  Drafts that the solver cannot prove feasible within the
certification budget are discarded and redrawn; only certified instances
(with their witness schedules) are ever emitted.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Callable, Iterator

from .dag import CapacityError, LayeredDag, default_layer_sizes, generate_layered_dag
from .model import (
    DisjunctivePair,
    Instance,
    InstanceMeta,
    Phase,
    PrecedenceEdge,
    ResourceSpec,
    Schedule,
    TaskSpec,
    save_instance,
)
from .solver import Status, horizon_from_parts, solve_feasibility
from .verifier import Label, verify_schedule

DATASET_FORMAT = "rcpsp-dataset/1"


class GenerationExhausted(RuntimeError):
    """Every draft for one (level, index) slot came out infeasible."""

    def __init__(self, level: int, index: int, attempts: int):
        super().__init__(
            f"no solver-feasible instance after {attempts} drafts "
            f"(level {level}, index {index}); config is mis-tuned"
        )
        self.level = level
        self.index = index
        self.attempts = attempts


@dataclass(frozen=True)
class PhaseConfig:
    """Knobs for one dataset: difficulty ramp, constraint axes, budgets."""

    phase: Phase
    layer_count: int
    level_start: int = 1
    level_end: int = 200
    instances_per_level: int = 10
    d_max: int = 10
    p_temporal: float = 0.0
    p_downtime: float = 0.0
    p_disjunctive: float = 0.0
    resource_pool: tuple[ResourceSpec, ...] = ()
    max_regen_attempts: int = 100
    cert_node_budget: int = 1000

    def __post_init__(self):
        for p in (self.p_temporal, self.p_downtime, self.p_disjunctive):
            if not 0.0 <= p <= 1.0:
                raise ValueError("axis probabilities must be in [0, 1]")
        if not 1 <= self.instances_per_level <= 10:
            raise ValueError("instances_per_level must be in 1..10")
        if self.level_start < 1 or self.level_end < self.level_start:
            raise ValueError("bad level range")
        if self.layer_count < 2:
            raise ValueError("need at least 2 layers")
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")

    @property
    def name(self) -> str:
        if self.phase is Phase.PHASE_I:
            return f"phase1-{self.layer_count}layer"
        return self.phase.value

    @property
    def levels(self) -> range:
        return range(self.level_start, self.level_end + 1)


@dataclass(frozen=True)
class DatacenterConfig:
    """Fixed narrative mapping: 5-stage rack workflow over shared crews."""

    stage_names: tuple[str, ...] = ("Shutdown", "Unrack", "Transport", "Install", "Test")
    crew_resources: tuple[ResourceSpec, ...] = (
        ResourceSpec("IT_Team", 2),
        ResourceSpec("DC_Crew", 3),
        ResourceSpec("Network_Engineers", 2),
        ResourceSpec("Forklift", 1),
        ResourceSpec("Convoy", 1),
    )
    stage_requirements: tuple[tuple[str, ...], ...] = (
        ("IT_Team",),
        ("DC_Crew", "Forklift"),
        ("Convoy",),
        ("DC_Crew", "Forklift"),
        ("IT_Team", "Network_Engineers"),
    )
    stage_duration_range: tuple[int, int] = (20, 60)

    def __post_init__(self):
        if len(self.stage_names) != 5 or len(self.stage_requirements) != 5:
            raise ValueError("the rack workflow has exactly 5 stages")
        caps = {r.id: r.capacity for r in self.crew_resources}
        if caps.get("Forklift") != 1 or caps.get("Convoy") != 1:
            raise ValueError("Forklift and Convoy must have capacity 1")


def default_resource_pool() -> tuple[ResourceSpec, ...]:
    """Three generic resources; pool capacities are per-instance maxima."""
    return (
        ResourceSpec("Resource_1", 3),
        ResourceSpec("Resource_2", 3),
        ResourceSpec("Resource_3", 3),
    )


def phase1_config(layers: int = 2, **overrides) -> PhaseConfig:
    return PhaseConfig(phase=Phase.PHASE_I, layer_count=layers, **overrides)


def phase2a_config(**overrides) -> PhaseConfig:
    return PhaseConfig(
        phase=Phase.PHASE_IIA,
        layer_count=5,
        p_temporal=0.75,
        p_downtime=0.75,
        p_disjunctive=0.75,
        resource_pool=default_resource_pool(),
        **overrides,
    )


def phase2b_config(**overrides) -> PhaseConfig:
    return PhaseConfig(
        phase=Phase.PHASE_IIB,
        layer_count=5,
        d_max=60,
        p_temporal=0.75,
        p_downtime=0.75,
        p_disjunctive=0.75,
        **overrides,
    )


def config_for_phase(phase: Phase, layers: int | None = None, **overrides) -> PhaseConfig:
    if phase is Phase.PHASE_I:
        return phase1_config(layers or 2, **overrides)
    if phase is Phase.PHASE_IIA:
        return phase2a_config(**overrides)
    return phase2b_config(**overrides)


def sub_seed(master_seed: int, *parts) -> int:
    """64-bit sub-seed: a pure, stable function of the derivation path."""
    blob = ":".join([str(master_seed), *(str(p) for p in parts)]).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


# ---------------------------------------------------------------------------
# Constraint axis sampling
# ---------------------------------------------------------------------------


def _sample_temporal_windows(
    rng: Random,
    durations: list[int],
    preds: list[list[int]],
    p_temporal: float,
) -> tuple[list[int | None], list[int | None]]:
    """Release and/or deadline per selected task, individually satisfiable.

    A selected task gets a release, a deadline, or both (uniform thirds).
    Releases are uniform on [0, total_work/3].  Deadlines sit at the
    task's earliest chain finish (precedence + releases) plus a uniform
    slack in [1, total_work], so no window is impossible on its own; any
    global clash is left to the certification loop to discard.
    """
    n = len(durations)
    total = sum(durations)
    flags: list[tuple[bool, bool]] = []
    for _ in range(n):
        if rng.random() < p_temporal:
            flags.append(rng.choice(((True, False), (False, True), (True, True))))
        else:
            flags.append((False, False))
    release_cap = max(1, total // 3)
    release: list[int | None] = [
        rng.randint(0, release_cap) if f[0] else None for f in flags
    ]
    est = [release[i] if release[i] is not None else 0 for i in range(n)]
    for j in range(n):  # node order is topological (edges go to later layers)
        for i in preds[j]:
            est[j] = max(est[j], est[i] + durations[i])
    deadline: list[int | None] = [
        est[i] + durations[i] + rng.randint(1, total) if flags[i][1] else None
        for i in range(n)
    ]
    return release, deadline


def _sample_downtimes(
    rng: Random,
    count: int,
    p_downtime: float,
    d_max: int,
    sampling_horizon: int,
) -> list[tuple[tuple[int, int], ...]]:
    """One downtime window per selected resource, inside the first half."""
    out: list[tuple[tuple[int, int], ...]] = []
    offset_cap = max(0, sampling_horizon // 2)
    for _ in range(count):
        if rng.random() < p_downtime:
            length = rng.randint(2, max(2, d_max))
            offset = rng.randint(0, offset_cap)
            out.append(((offset, offset + length),))
        else:
            out.append(())
    return out


# ---------------------------------------------------------------------------
# Synthetic drafts (pure precedence and multi-constraint-interaction)
# ---------------------------------------------------------------------------


def inject_constraints(
    dag: LayeredDag,
    cfg: PhaseConfig,
    rng: Random,
    level: int,
    index: int,
    seed: int,
) -> Instance:
    """Turn a layered DAG into a full draft instance (not yet certified).

    Durations are uniform on [1, d_max].  Outside the pure-precedence
    phase every task demands a uniform non-empty subset of the generic
    resources (one unit each) whose capacities are drawn per instance.
    The three constraint axes fire independently at the configured
    probabilities per task / resource / unordered pair.
    """
    n = dag.num_nodes
    perm = rng.sample(range(1, n + 1), n)
    ids = [f"Task_{p}" for p in perm]
    durations = [rng.randint(1, cfg.d_max) for _ in range(n)]
    total = sum(durations)

    demands: list[dict[str, int]] = [{} for _ in range(n)]
    capacities: list[int] = []
    if cfg.phase is not Phase.PHASE_I and cfg.resource_pool:
        capacities = [rng.randint(1, tpl.capacity) for tpl in cfg.resource_pool]
        pool_ids = [tpl.id for tpl in cfg.resource_pool]
        for i in range(n):
            mask = rng.randrange(1, 1 << len(pool_ids))
            chosen = [rid for b, rid in enumerate(pool_ids) if mask >> b & 1]
            demands[i] = {rid: 1 for rid in rng.sample(chosen, len(chosen))}

    preds: list[list[int]] = [[] for _ in range(n)]
    for i, j in dag.edges:
        preds[j].append(i)
    release, deadline = _sample_temporal_windows(rng, durations, preds, cfg.p_temporal)
    max_release = max((r for r in release if r is not None), default=0)
    sampling_horizon = total + max(1, total // 3)

    downtimes = _sample_downtimes(
        rng, len(capacities), cfg.p_downtime, cfg.d_max, sampling_horizon
    )
    resources = [
        ResourceSpec(tpl.id, capacities[k], downtimes[k])
        for k, tpl in enumerate(cfg.resource_pool)
    ] if capacities else []

    disjunctives: list[DisjunctivePair] = []
    if cfg.p_disjunctive > 0:
        for a in range(n):
            for b in range(a + 1, n):
                if rng.random() < cfg.p_disjunctive:
                    disjunctives.append(DisjunctivePair(ids[a], ids[b]))

    tasks = [
        TaskSpec(ids[i], durations[i], demands[i], release[i], deadline[i])
        for i in range(n)
    ]
    horizon = horizon_from_parts(
        total,
        max((d for d in deadline if d is not None), default=0),
        max_release,
        max((w[0][1] for w in downtimes if w), default=0),
    )
    meta = InstanceMeta(
        phase=cfg.phase,
        layer_count=cfg.layer_count,
        level=level,
        instance_index=index,
        seed=seed,
        layer_of={ids[i]: dag.layer_of[i] for i in range(n)},
    )
    return Instance(
        tasks=tasks,
        resources=resources,
        edges=[PrecedenceEdge(ids[i], ids[j]) for i, j in dag.edges],
        disjunctives=disjunctives,
        horizon=horizon,
        meta=meta,
    )


def _build_dag(cfg: PhaseConfig, level: int, rng: Random) -> LayeredDag:
    sizes = default_layer_sizes(cfg.layer_count, level)
    for _ in range(16):
        try:
            return generate_layered_dag(cfg.layer_count, level, sizes, rng)
        except CapacityError:
            sizes = [math.ceil(1.5 * s) for s in sizes]
    raise CapacityError(f"could not place {level} edges even after scaling layers")


def generate_certified_instance(
    cfg: PhaseConfig,
    level: int,
    index: int,
    master_seed: int,
) -> tuple[Instance, Schedule]:
    """Draw drafts until the solver certifies one; return it with its witness."""
    for attempt in range(cfg.max_regen_attempts):
        seed = sub_seed(master_seed, cfg.name, level, index, attempt)
        rng = Random(seed)
        dag = _build_dag(cfg, level, rng)
        instance = inject_constraints(dag, cfg, rng, level=level, index=index, seed=seed)
        witness = _certify(instance, cfg.cert_node_budget)
        if witness is not None:
            return instance, witness
    raise GenerationExhausted(level, index, cfg.max_regen_attempts)


def _certify(instance: Instance, node_budget: int) -> Schedule | None:
    # Unknown (budget out) counts as a discard: only provably feasible ships.
    outcome = solve_feasibility(instance, node_budget=node_budget, time_limit=None)
    if outcome.status is not Status.FEASIBLE:
        return None
    report = verify_schedule(instance, outcome.witness)
    if report.label is not Label.FEASIBLE:
        raise RuntimeError(f"certification witness failed verification: {report.violations[:3]}")
    return outcome.witness


# ---------------------------------------------------------------------------
# Data-center migration drafts
# ---------------------------------------------------------------------------


def rack_count_for_level(level: int) -> int:
    """Smallest R >= 2 with R(R-1) >= ceil(2k/3), minimum 2.

    Per ordered rack pair the 5-stage grid admits at most 4 mutually
    non-redundant inter-rack edges once the stage chains exist, and the
    uniform sampler saturates well below that; this margin keeps the
    rejection budget comfortable up to level 200 (calibrated, with the
    1.5x scale-up retry as backstop).
    """
    need = -(-2 * level // 3)
    r = 2
    while r * (r - 1) < need:
        r += 1
    return r


def _build_datacenter_dag(level: int, racks: int, rng: Random) -> tuple[LayeredDag, int]:
    for _ in range(16):
        chains = [
            (s * racks + r, (s + 1) * racks + r)
            for r in range(racks)
            for s in range(4)
        ]
        try:
            dag = generate_layered_dag(5, level, [racks] * 5, rng, pre_edges=chains)
            return dag, racks
        except CapacityError:
            racks = math.ceil(1.5 * racks)
    raise CapacityError(f"could not place {level} inter-rack edges even after adding racks")


def datacenter_instantiate(
    level: int,
    index: int,
    dc_cfg: DatacenterConfig,
    gen_cfg: PhaseConfig,
    master_seed: int,
) -> tuple[Instance, Schedule]:
    """Certified data-center migration instance for one (level, index) slot.

    Every rack contributes the fixed 5-stage chain; the level's k sampled
    edges become inter-rack dependencies on top.  All task pairs sharing
    a capacity-1 resource are emitted as disjunctive conflicts, plus
    extra pairs sampled among tasks sharing any crew or equipment.
    """
    for attempt in range(gen_cfg.max_regen_attempts):
        seed = sub_seed(master_seed, gen_cfg.name, level, index, attempt)
        rng = Random(seed)
        dag, racks = _build_datacenter_dag(level, rack_count_for_level(level), rng)
        instance = _datacenter_draft(dag, racks, dc_cfg, gen_cfg, rng, level, index, seed)
        witness = _certify(instance, gen_cfg.cert_node_budget)
        if witness is not None:
            return instance, witness
    raise GenerationExhausted(level, index, gen_cfg.max_regen_attempts)


def _datacenter_draft(
    dag: LayeredDag,
    racks: int,
    dc_cfg: DatacenterConfig,
    gen_cfg: PhaseConfig,
    rng: Random,
    level: int,
    index: int,
    seed: int,
) -> Instance:
    n = dag.num_nodes
    stage_slugs = [s.lower() for s in dc_cfg.stage_names]
    ids = [
        f"Rack_{node % racks + 1}_{stage_slugs[node // racks]}" for node in range(n)
    ]
    durations = [rng.randint(*dc_cfg.stage_duration_range) for _ in range(n)]
    total = sum(durations)
    demands = [
        {rid: 1 for rid in dc_cfg.stage_requirements[node // racks]} for node in range(n)
    ]

    preds: list[list[int]] = [[] for _ in range(n)]
    for i, j in dag.edges:
        preds[j].append(i)
    release, deadline = _sample_temporal_windows(
        rng, durations, preds, gen_cfg.p_temporal
    )
    sampling_horizon = total + max(1, total // 3)
    downtimes = _sample_downtimes(
        rng, len(dc_cfg.crew_resources), gen_cfg.p_downtime, gen_cfg.d_max, sampling_horizon
    )
    resources = [
        ResourceSpec(tpl.id, tpl.capacity, downtimes[k])
        for k, tpl in enumerate(dc_cfg.crew_resources)
    ]

    # equipment conflicts: capacity-1 sharers are mandatory, the rest sampled
    disjunctives: list[DisjunctivePair] = []
    seen: set[tuple[str, str]] = set()
    for res in dc_cfg.crew_resources:
        if res.capacity != 1:
            continue
        users = [i for i in range(n) if res.id in demands[i]]
        for x in range(len(users)):
            for y in range(x + 1, len(users)):
                pair = DisjunctivePair(ids[users[x]], ids[users[y]])
                if (pair.a, pair.b) not in seen:
                    seen.add((pair.a, pair.b))
                    disjunctives.append(pair)
    for a in range(n):
        for b in range(a + 1, n):
            pair = DisjunctivePair(ids[a], ids[b])
            if (pair.a, pair.b) in seen:
                continue
            if not set(demands[a]) & set(demands[b]):
                continue
            if rng.random() < gen_cfg.p_disjunctive:
                seen.add((pair.a, pair.b))
                disjunctives.append(pair)

    tasks = [
        TaskSpec(ids[i], durations[i], demands[i], release[i], deadline[i])
        for i in range(n)
    ]
    horizon = horizon_from_parts(
        total,
        max((d for d in deadline if d is not None), default=0),
        max((r for r in release if r is not None), default=0),
        max((w[0][1] for w in downtimes if w), default=0),
    )
    meta = InstanceMeta(
        phase=Phase.PHASE_IIB,
        layer_count=5,
        level=level,
        instance_index=index,
        seed=seed,
        layer_of={ids[i]: dag.layer_of[i] for i in range(n)},
        rack_count=racks,
    )
    return Instance(
        tasks=tasks,
        resources=resources,
        edges=[PrecedenceEdge(ids[i], ids[j]) for i, j in dag.edges],
        disjunctives=disjunctives,
        horizon=horizon,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def generate_dataset(
    cfg: PhaseConfig,
    master_seed: int,
    dc_cfg: DatacenterConfig | None = None,
) -> Iterator[tuple[int, int, Instance, Schedule]]:
    """Yield certified (level, index, instance, witness) in fixed order."""
    if cfg.phase is Phase.PHASE_IIB and dc_cfg is None:
        dc_cfg = DatacenterConfig()
    for level in cfg.levels:
        for index in range(cfg.instances_per_level):
            if cfg.phase is Phase.PHASE_IIB:
                instance, witness = datacenter_instantiate(
                    level, index, dc_cfg, cfg, master_seed
                )
            else:
                instance, witness = generate_certified_instance(
                    cfg, level, index, master_seed
                )
            yield level, index, instance, witness


def config_snapshot(cfg: PhaseConfig, dc_cfg: DatacenterConfig | None = None) -> dict:
    snap = {
        "phase": cfg.phase.value,
        "layer_count": cfg.layer_count,
        "level_start": cfg.level_start,
        "level_end": cfg.level_end,
        "instances_per_level": cfg.instances_per_level,
        "d_max": cfg.d_max,
        "p_temporal": cfg.p_temporal,
        "p_downtime": cfg.p_downtime,
        "p_disjunctive": cfg.p_disjunctive,
        "resource_pool": [
            {"id": r.id, "capacity": r.capacity} for r in cfg.resource_pool
        ],
        "max_regen_attempts": cfg.max_regen_attempts,
        "cert_node_budget": cfg.cert_node_budget,
    }
    if dc_cfg is not None:
        snap["datacenter"] = {
            "stage_names": list(dc_cfg.stage_names),
            "crew_resources": [
                {"id": r.id, "capacity": r.capacity} for r in dc_cfg.crew_resources
            ],
            "stage_requirements": [list(req) for req in dc_cfg.stage_requirements],
            "stage_duration_range": list(dc_cfg.stage_duration_range),
        }
    return snap


def write_dataset(
    cfg: PhaseConfig,
    master_seed: int,
    out_dir: str | Path,
    dc_cfg: DatacenterConfig | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> Path:
    """Write `<out>/<name>/<level>/<index>.json` files plus the manifest.

    Output is byte-identical for identical (config, master_seed).
    Returns the dataset root directory.
    """
    if cfg.phase is Phase.PHASE_IIB and dc_cfg is None:
        dc_cfg = DatacenterConfig()
    root = Path(out_dir) / cfg.name
    root.mkdir(parents=True, exist_ok=True)
    count = 0
    for level, index, instance, witness in generate_dataset(cfg, master_seed, dc_cfg):
        level_dir = root / str(level)
        level_dir.mkdir(exist_ok=True)
        save_instance(level_dir / f"{index}.json", instance, witness)
        count += 1
        if progress is not None:
            progress(level, index)
    manifest = {
        "format": DATASET_FORMAT,
        "name": cfg.name,
        "master_seed": master_seed,
        "instance_count": count,
        "config": config_snapshot(cfg, dc_cfg),
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return root


def load_manifest(dataset_dir: str | Path) -> dict:
    return json.loads((Path(dataset_dir) / "manifest.json").read_text(encoding="utf-8"))
