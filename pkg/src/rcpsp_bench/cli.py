"""Command-line interface: generate, run, verify, score, report."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agents import parse_agent_spec
from .generator import Phase, config_for_phase, write_dataset
from .harness import build_report, run_benchmark, score_run
from .model import load_instance
from .prompts import ParseFailure, parse_response
from .verifier import Label, verify


@click.group()
def main():
    """Solver-certified RCPSP feasibility benchmark toolkit."""


def _parse_levels(text: str) -> tuple[int, int]:
    sep = "-" if "-" in text else ".." if ".." in text else None
    if sep:
        lo, hi = text.split(sep, 1) if sep == "-" else text.split("..", 1)
        return int(lo), int(hi)
    value = int(text)
    return value, value


@main.command()
@click.option("--phase", "phase_name", required=True,
              type=click.Choice([p.value for p in Phase]))
@click.option("--layers", type=int, default=None,
              help="Layer count for pure-precedence datasets (2-5).")
@click.option("--levels", default="1-200", show_default=True,
              help="Difficulty range, e.g. 1-200 or a single level.")
@click.option("--per-level", type=click.IntRange(1, 10), default=10, show_default=True)
@click.option("--seed", type=int, required=True, help="Master seed for the dataset.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def generate(phase_name, layers, levels, per_level, seed, out):
    """Generate a solver-certified dataset under OUT/<dataset-name>/."""
    lo, hi = _parse_levels(levels)
    cfg = config_for_phase(
        Phase(phase_name),
        layers=layers,
        level_start=lo,
        level_end=hi,
        instances_per_level=per_level,
    )

    done = 0

    def progress(level, index):
        nonlocal done
        done += 1
        if done % 100 == 0:
            click.echo(f"  {done} instances written (level {level})")

    root = write_dataset(cfg, seed, out, progress=progress)
    click.echo(f"dataset {cfg.name}: {done} instances at {root}")


@main.command()
@click.option("--dataset", "datasets", multiple=True, required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Dataset directory (repeatable).")
@click.option("--agent", "agent_names", multiple=True, required=True,
              help="oracle | random | greedy | http:<url> (repeatable).")
@click.option("--parallel", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def run(datasets, agent_names, parallel, out):
    """Run agents over datasets, appending to OUT/records.jsonl (resumable)."""
    agents = [parse_agent_spec(a) for a in agent_names]
    run_dir = run_benchmark(list(datasets), agents, out, parallelism=parallel)
    click.echo(f"run records at {run_dir / 'records.jsonl'}")


@main.command()
@click.option("--instance", "instance_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--schedule", "schedule_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="File with the response text (JSON schedule).")
def verify_cmd(instance_path, schedule_path):
    """Verify one candidate schedule against one instance file."""
    instance, _ = load_instance(instance_path)
    raw = Path(schedule_path).read_text(encoding="utf-8")
    parsed = parse_response(raw)
    if isinstance(parsed, ParseFailure):
        click.echo(json.dumps({"label": "other", "parse_failure": parsed.reason}, indent=2))
        sys.exit(1)
    report = verify(instance, parsed)
    click.echo(
        json.dumps(
            {
                "label": report.label.value,
                "violations": [v.message for v in report.violations],
                "notes": report.notes,
            },
            indent=2,
        )
    )
    sys.exit(0 if report.label is Label.FEASIBLE else 1)


# click turns verify_cmd into "verify-cmd"; keep the documented verb instead
verify_cmd.name = "verify"
main.add_command(verify_cmd)


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--tau", type=float, default=0.7, show_default=True)
def score(run_dir, tau):
    """Print summary metrics for a completed run as JSON."""
    click.echo(json.dumps(score_run(run_dir, tau=tau), indent=2, sort_keys=True))


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Report directory (default: <run>/report).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--tau", type=float, default=0.7, show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def report(run_dir, out, fmt, tau, figures):
    """Write summary tables, smoothed-curve CSVs and figures for a run."""
    artifacts = build_report(run_dir, out_dir=out, fmt=fmt, tau=tau, figures=figures)
    click.echo(f"{len(artifacts)} artifacts under {artifacts['summary'].parent}")


if __name__ == "__main__":
    main()
