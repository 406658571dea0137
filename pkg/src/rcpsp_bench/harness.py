"""End-to-end benchmark orchestration: run agents, record, score, report.

Runs are append-only JSONL record streams plus a manifest; reruns skip
already-completed (dataset, level, index, agent) pairs, so an
interrupted run resumes without duplicates.  Reports are derived purely
from the stored records and are byte-stable across repeated invocations.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import plotting
from .agents import AgentSpec, TransportError, respond
from .generator import load_manifest
from .metrics import (
    LevelSeries,
    benchmark_score,
    format_breakpoint,
    infeasibility_breakdown,
    summarize,
)
from .model import Instance, Phase, load_instance
from .prompts import ParseFailure, default_prompt_kind, parse_response, render_prompt
from .verifier import Label, parse_failure_report, verify

RECORDS_FILE = "records.jsonl"
RUN_MANIFEST_FILE = "run.json"


class IncompleteRun(RuntimeError):
    def __init__(self, missing: list[tuple]):
        preview = ", ".join(map(str, missing[:5]))
        super().__init__(f"{len(missing)} (dataset, level, index, agent) pairs missing: {preview}")
        self.missing = missing


@dataclass
class RunRecord:
    dataset: str
    level: int
    index: int
    agent: str
    prompt_sha256: str
    response: str
    parse_ok: bool
    parse_reason: str | None
    label: str
    violations: list[dict]
    notes: list[str]
    claimed_makespan: int | None
    latency_s: float
    attempts: int
    timestamp: str

    @property
    def key(self) -> tuple[str, int, int, str]:
        return (self.dataset, self.level, self.index, self.agent)


def run_agent_on_instance(
    spec: AgentSpec, instance: Instance, dataset_name: str
) -> RunRecord:
    """Single-shot protocol: one prompt out, one response judged."""
    prompt = render_prompt(instance, default_prompt_kind(instance))
    t0 = time.perf_counter()
    attempts = 0
    try:
        response, attempts = respond(spec, instance, prompt)
    except TransportError as exc:
        response = ""
        report = parse_failure_report(f"no response: {exc}")
        claimed = None
    else:
        parsed = parse_response(response)
        if isinstance(parsed, ParseFailure):
            report = parse_failure_report(parsed.reason)
            claimed = None
        else:
            report = verify(instance, parsed)
            claimed = parsed.claimed_makespan
    latency = time.perf_counter() - t0
    return RunRecord(
        dataset=dataset_name,
        level=instance.meta.level,
        index=instance.meta.instance_index,
        agent=spec.name,
        prompt_sha256=hashlib.sha256(prompt.encode()).hexdigest(),
        response=response,
        parse_ok=not report.parse_failed,
        parse_reason=report.parse_reason,
        label=report.label.value,
        violations=[
            {"category": v.category.value, "message": v.message, "detail": v.detail}
            for v in report.violations
        ],
        notes=list(report.notes),
        claimed_makespan=claimed,
        latency_s=latency,
        attempts=attempts,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


def _dataset_instance_paths(dataset_dir: Path) -> list[tuple[int, int, Path]]:
    manifest = load_manifest(dataset_dir)
    cfg = manifest["config"]
    out = []
    for level in range(cfg["level_start"], cfg["level_end"] + 1):
        for index in range(cfg["instances_per_level"]):
            out.append((level, index, dataset_dir / str(level) / f"{index}.json"))
    return out


def run_benchmark(
    dataset_dirs: list[str | Path],
    agents: list[AgentSpec],
    out_dir: str | Path,
    parallelism: int = 1,
) -> Path:
    """Execute every (instance, agent) pair, streaming records to disk.

    Idempotent: pairs already present in the run's records file are
    skipped, and a failing pair is recorded as label "other" without
    aborting the batch.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / RECORDS_FILE
    done: set[tuple] = set()
    if records_path.exists():
        for rec in load_records(out):
            done.add((rec["dataset"], rec["level"], rec["index"], rec["agent"]))

    datasets = []
    jobs = []
    for d in dataset_dirs:
        d = Path(d)
        manifest = load_manifest(d)
        datasets.append({"name": manifest["name"], "dir": str(d), "config": manifest["config"]})
        for level, index, path in _dataset_instance_paths(d):
            for spec in agents:
                if (manifest["name"], level, index, spec.name) not in done:
                    jobs.append((manifest["name"], level, index, path, spec))

    manifest_doc = {
        "format": "rcpsp-run/1",
        "datasets": datasets,
        "agents": [
            {"kind": spec.kind.value, "name": spec.name, "url": spec.url,
             "temperature": spec.temperature, "max_output_tokens": spec.max_output_tokens}
            for spec in agents
        ],
        "parallelism": parallelism,
    }
    (out / RUN_MANIFEST_FILE).write_text(
        json.dumps(manifest_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    def one(job) -> RunRecord:
        name, level, index, path, spec = job
        instance, _ = load_instance(path)
        try:
            return run_agent_on_instance(spec, instance, name)
        except Exception as exc:  # isolate: a bad pair must not sink the batch
            report = parse_failure_report(f"harness failure: {exc}")
            return RunRecord(
                dataset=name, level=level, index=index, agent=spec.name,
                prompt_sha256="", response="", parse_ok=False,
                parse_reason=report.parse_reason, label=report.label.value,
                violations=[], notes=[], claimed_makespan=None,
                latency_s=0.0, attempts=0,
                timestamp=datetime.now(timezone.utc).isoformat(),
            )

    with records_path.open("a", encoding="utf-8") as sink:
        if parallelism <= 1:
            for job in jobs:
                sink.write(json.dumps(asdict(one(job))) + "\n")
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                for record in pool.map(one, jobs):
                    sink.write(json.dumps(asdict(record)) + "\n")
    return out


def load_records(run_dir: str | Path) -> list[dict]:
    path = Path(run_dir) / RECORDS_FILE
    records = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _series_by_pair(run_dir: Path, records: list[dict]) -> dict:
    """(agent, dataset) -> LevelSeries, validated for completeness."""
    manifest = json.loads((run_dir / RUN_MANIFEST_FILE).read_text(encoding="utf-8"))
    by_key = {}
    for rec in records:
        by_key[(rec["dataset"], rec["level"], rec["index"], rec["agent"])] = rec

    agents = sorted({a["name"] for a in manifest["agents"]})
    out: dict[tuple[str, str], dict] = {}
    missing: list[tuple] = []
    for ds in sorted(manifest["datasets"], key=lambda d: d["name"]):
        cfg = ds["config"]
        levels = range(cfg["level_start"], cfg["level_end"] + 1)
        for agent in agents:
            solved, counts, labels = [], [], []
            for level in levels:
                got = 0
                ok = 0
                for index in range(cfg["instances_per_level"]):
                    rec = by_key.get((ds["name"], level, index, agent))
                    if rec is None:
                        missing.append((ds["name"], level, index, agent))
                        continue
                    got += 1
                    if rec["label"] == Label.FEASIBLE.value:
                        ok += 1
                    else:
                        labels.append(Label(rec["label"]))
                solved.append(ok)
                counts.append(got)
            out[(agent, ds["name"])] = {
                "series": None if 0 in counts else LevelSeries(tuple(solved), tuple(counts)),
                "failure_labels": labels,
                "phase": cfg["phase"],
                "level_start": cfg["level_start"],
            }
    if missing:
        raise IncompleteRun(missing)
    return out


def score_run(run_dir: str | Path, tau: float = 0.7, window: int = 10) -> dict:
    """Summary metrics per (agent, dataset) plus per-agent benchmark score."""
    run_dir = Path(run_dir)
    pairs = _series_by_pair(run_dir, load_records(run_dir))
    rows = []
    phase2_waucs: dict[str, list[float]] = {}
    for (agent, dataset), data in sorted(pairs.items()):
        summary = summarize(data["series"], tau=tau, window=window)
        rows.append(
            {
                "agent": agent,
                "dataset": dataset,
                "wauc": summary.wauc,
                "auc": summary.auc,
                "success_pct": 100.0 * summary.success_pct,
                "breakpoint": format_breakpoint(summary.bp_level, summary.K),
                "breakdown": infeasibility_breakdown(data["failure_labels"]),
            }
        )
        if data["phase"] in (Phase.PHASE_IIA.value, Phase.PHASE_IIB.value):
            phase2_waucs.setdefault(agent, []).append(summary.wauc)
    scores = {
        agent: benchmark_score(waucs) for agent, waucs in sorted(phase2_waucs.items())
    }
    return {"tau": tau, "rows": rows, "benchmark_scores": scores}


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def build_report(
    run_dir: str | Path,
    out_dir: str | Path | None = None,
    fmt: str = "csv",
    tau: float = 0.7,
    window: int = 10,
    figures: bool = True,
) -> dict[str, Path]:
    """Write summary tables, per-agent curve files and (optionally) figures.

    Everything is derived from the stored records; rerunning over the
    same records reproduces the artifacts byte for byte.
    """
    run_dir = Path(run_dir)
    out = Path(out_dir) if out_dir is not None else run_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    pairs = _series_by_pair(run_dir, load_records(run_dir))
    scored = score_run(run_dir, tau=tau, window=window)
    artifacts: dict[str, Path] = {}

    if fmt == "json":
        path = out / "summary.json"
        path.write_text(json.dumps(scored, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    elif fmt == "csv":
        path = out / "summary.csv"
        _write_csv(
            path,
            ["agent", "dataset", "wauc", "auc", "success_pct", "breakpoint", "benchmark_score"],
            [
                [
                    row["agent"],
                    row["dataset"],
                    f"{row['wauc']:.6f}",
                    f"{row['auc']:.6f}",
                    f"{row['success_pct']:.3f}",
                    row["breakpoint"],
                    f"{scored['benchmark_scores'][row['agent']]:.6f}"
                    if row["agent"] in scored["benchmark_scores"]
                    else "",
                ]
                for row in scored["rows"]
            ],
        )
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    artifacts["summary"] = path

    bp_path = out / "breakpoints.csv"
    _write_csv(
        bp_path,
        ["agent", "dataset", "breakpoint"],
        [[row["agent"], row["dataset"], row["breakpoint"]] for row in scored["rows"]],
    )
    artifacts["breakpoints"] = bp_path

    breakdown_path = out / "breakdown.csv"
    _write_csv(
        breakdown_path,
        ["agent", "dataset", "category", "percent"],
        [
            [row["agent"], row["dataset"], category, f"{pct:.3f}"]
            for row in scored["rows"]
            for category, pct in row["breakdown"].items()
        ],
    )
    artifacts["breakdown"] = breakdown_path

    curves_dir = out / "curves"
    curves_dir.mkdir(exist_ok=True)
    curve_data: dict[str, dict[str, tuple[list[int], list[float]]]] = {}
    for (agent, dataset), data in sorted(pairs.items()):
        summary = summarize(data["series"], tau=tau, window=window)
        levels = [data["level_start"] + i for i in range(summary.K)]
        safe = f"{agent}__{dataset}".replace("/", "_").replace(":", "_")
        curve_path = curves_dir / f"{safe}.csv"
        _write_csv(
            curve_path,
            ["level", "feasibility", "smoothed"],
            [
                [lvl, f"{f:.6f}", f"{s:.6f}"]
                for lvl, f, s in zip(levels, summary.feasibility, summary.smoothed)
            ],
        )
        artifacts[f"curve:{agent}:{dataset}"] = curve_path
        curve_data.setdefault(dataset, {})[agent] = (levels, list(summary.smoothed))

    if figures:
        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        for dataset, by_agent in sorted(curve_data.items()):
            safe = dataset.replace("/", "_")
            p = fig_dir / f"feasibility_{safe}.png"
            plotting.save_feasibility_curves(dataset, by_agent, p)
            artifacts[f"figure:feasibility:{dataset}"] = p
        wauc_by_dataset: dict[str, dict[str, float]] = {}
        for row in scored["rows"]:
            wauc_by_dataset.setdefault(row["dataset"], {})[row["agent"]] = row["wauc"]
        p = fig_dir / "wauc.png"
        plotting.save_wauc_bars(wauc_by_dataset, p)
        artifacts["figure:wauc"] = p
        breakdown_by_agent: dict[str, dict[str, float]] = {}
        for row in scored["rows"]:
            for category, pct in row["breakdown"].items():
                agg = breakdown_by_agent.setdefault(row["agent"], {})
                agg[category] = agg.get(category, 0.0) + pct
        if breakdown_by_agent:
            p = fig_dir / "breakdown.png"
            plotting.save_breakdown_bars(breakdown_by_agent, p)
            artifacts["figure:breakdown"] = p
    return artifacts
