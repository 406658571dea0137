import json

import pytest
from click.testing import CliRunner

from rcpsp_bench.cli import main
from rcpsp_bench.model import load_instance
from rcpsp_bench.prompts import format_response


@pytest.fixture(scope="module")
def cli_env(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["generate", "--phase", "phase2a", "--levels", "1-2", "--per-level", "2",
         "--seed", "21", "--out", str(base / "data")],
    )
    assert result.exit_code == 0, result.output
    return runner, base


def test_generate_layout(cli_env):
    _, base = cli_env
    root = base / "data" / "phase2a"
    assert (root / "manifest.json").exists()
    assert (root / "1" / "0.json").exists()
    assert (root / "2" / "1.json").exists()


def test_run_score_report(cli_env):
    runner, base = cli_env
    dataset = str(base / "data" / "phase2a")
    run_dir = str(base / "run")
    result = runner.invoke(
        main,
        ["run", "--dataset", dataset, "--agent", "oracle", "--agent", "greedy",
         "--parallel", "2", "--out", run_dir],
    )
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, ["score", "--run", run_dir, "--tau", "0.7"])
    assert result.exit_code == 0, result.output
    scored = json.loads(result.output)
    assert scored["benchmark_scores"]["oracle"] == 1.0

    result = runner.invoke(
        main, ["report", "--run", run_dir, "--format", "csv", "--out", str(base / "rep")]
    )
    assert result.exit_code == 0, result.output
    assert (base / "rep" / "summary.csv").exists()
    assert list((base / "rep" / "figures").glob("*.png"))


def test_verify_clean_and_broken(cli_env, tmp_path):
    runner, base = cli_env
    instance_path = base / "data" / "phase2a" / "1" / "0.json"
    instance, witness = load_instance(instance_path)

    good = tmp_path / "good.json"
    good.write_text(format_response(instance, witness))
    result = runner.invoke(
        main, ["verify", "--instance", str(instance_path), "--schedule", str(good)]
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["label"] == "feasible"

    bad = tmp_path / "bad.json"
    bad.write_text('{"schedule": [{"task": "Task_1", "start_time": 0, "end_time": 1}]}')
    result = runner.invoke(
        main, ["verify", "--instance", str(instance_path), "--schedule", str(bad)]
    )
    assert result.exit_code == 1
    assert json.loads(result.output)["label"] == "other"

    refusal = tmp_path / "refusal.txt"
    refusal.write_text("No.")
    result = runner.invoke(
        main, ["verify", "--instance", str(instance_path), "--schedule", str(refusal)]
    )
    assert result.exit_code == 1
    assert "parse_failure" in result.output


def test_phase1_generate_with_layers(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["generate", "--phase", "phase1", "--layers", "3", "--levels", "2",
         "--per-level", "1", "--seed", "5", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "phase1-3layer" / "2" / "0.json").exists()
