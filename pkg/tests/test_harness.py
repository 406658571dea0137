import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from rcpsp_bench.agents import (
    AgentKind,
    AgentSpec,
    TransportError,
    parse_agent_spec,
    respond,
)
from rcpsp_bench.generator import phase1_config, phase2a_config, write_dataset
from rcpsp_bench.harness import (
    IncompleteRun,
    build_report,
    load_records,
    run_agent_on_instance,
    run_benchmark,
    score_run,
)
from rcpsp_bench.model import load_instance
from rcpsp_bench.verifier import Label

from .conftest import GOLDEN


@pytest.fixture(scope="module")
def tiny_datasets(tmp_path_factory):
    base = tmp_path_factory.mktemp("datasets")
    iia = write_dataset(phase2a_config(level_end=3, instances_per_level=2), 11, base)
    p1 = write_dataset(phase1_config(2, level_end=3, instances_per_level=2), 11, base)
    return iia, p1


class _CannedHandler(BaseHTTPRequestHandler):
    calls = []
    behavior = "echo-witness"

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).calls.append(body)
        if type(self).behavior == "fail":
            self.send_response(500)
            self.end_headers()
            return
        if type(self).behavior == "refuse":
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(json.dumps({"completion": "I cannot do this."}).encode())
            return
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(json.dumps({"completion": '{"schedule": []}'}).encode())

    def log_message(self, *args):
        pass


@pytest.fixture()
def canned_server():
    server = HTTPServer(("127.0.0.1", 0), _CannedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _CannedHandler.calls = []
    _CannedHandler.behavior = "echo-witness"
    yield f"http://127.0.0.1:{server.server_port}/complete"
    server.shutdown()


def test_parse_agent_spec():
    assert parse_agent_spec("oracle").kind is AgentKind.ORACLE_SOLVER
    assert parse_agent_spec("random").kind is AgentKind.RANDOM_SCHEDULER
    assert parse_agent_spec("greedy").kind is AgentKind.GREEDY_TOPOLOGICAL
    http = parse_agent_spec("http:http://host/v1")
    assert http.kind is AgentKind.HTTP_ENDPOINT and http.url == "http://host/v1"
    with pytest.raises(ValueError):
        parse_agent_spec("telepathy")


def test_oracle_agent_feasible_on_certified(tiny_datasets):
    iia, _ = tiny_datasets
    instance, _ = load_instance(iia / "1" / "0.json")
    record = run_agent_on_instance(parse_agent_spec("oracle"), instance, "phase2a")
    assert record.label == Label.FEASIBLE.value
    assert record.attempts == 1


def test_greedy_agent_feasible_on_phase1(tiny_datasets):
    _, p1 = tiny_datasets
    instance, _ = load_instance(p1 / "3" / "1.json")
    record = run_agent_on_instance(parse_agent_spec("greedy"), instance, "phase1-2layer")
    assert record.label == Label.FEASIBLE.value


def test_random_agent_is_deterministic(tiny_datasets):
    iia, _ = tiny_datasets
    instance, _ = load_instance(iia / "2" / "0.json")
    spec = parse_agent_spec("random")
    a, _ = respond(spec, instance, "")
    b, _ = respond(spec, instance, "")
    assert a == b


def test_http_agent_single_request(canned_server):
    spec = AgentSpec(kind=AgentKind.HTTP_ENDPOINT, name="canned", url=canned_server)
    text, attempts = respond(spec, None, "PROMPT")
    assert attempts == 1
    assert len(_CannedHandler.calls) == 1
    assert _CannedHandler.calls[0]["prompt"] == "PROMPT"
    assert _CannedHandler.calls[0]["temperature"] == 0.0
    assert text == '{"schedule": []}'


def test_http_agent_retries_then_fails(canned_server):
    _CannedHandler.behavior = "fail"
    spec = AgentSpec(
        kind=AgentKind.HTTP_ENDPOINT, name="canned", url=canned_server, retries=1
    )
    with pytest.raises(TransportError):
        respond(spec, None, "PROMPT")
    assert len(_CannedHandler.calls) == 2  # original + one retry


def test_run_benchmark_counts_and_resume(tiny_datasets, tmp_path):
    iia, p1 = tiny_datasets
    agents = [parse_agent_spec("oracle"), parse_agent_spec("greedy")]
    run_dir = run_benchmark([iia, p1], agents, tmp_path / "run")
    records = load_records(run_dir)
    assert len(records) == 2 * 12  # two agents x (6 + 6) instances
    # a rerun adds nothing and keeps records identical
    before = (run_dir / "records.jsonl").read_bytes()
    run_benchmark([iia, p1], agents, run_dir)
    assert (run_dir / "records.jsonl").read_bytes() == before
    keys = {(r["dataset"], r["level"], r["index"], r["agent"]) for r in records}
    assert len(keys) == len(records)


def test_run_benchmark_http_counts_one_request_per_pair(
    tiny_datasets, tmp_path, canned_server
):
    _, p1 = tiny_datasets
    spec = AgentSpec(kind=AgentKind.HTTP_ENDPOINT, name="canned", url=canned_server)
    run_benchmark([p1], [spec], tmp_path / "run_http")
    # single-shot: exactly one outbound request per (instance, agent) pair
    assert len(_CannedHandler.calls) == 6
    records = load_records(tmp_path / "run_http")
    assert all(r["attempts"] == 1 for r in records)
    # an empty schedule is structurally infeasible, never a crash
    assert {r["label"] for r in records} == {Label.OTHER.value}


def test_transport_failure_recorded_not_raised(tiny_datasets, tmp_path):
    _, p1 = tiny_datasets
    dead = AgentSpec(
        kind=AgentKind.HTTP_ENDPOINT,
        name="dead",
        url="http://127.0.0.1:9/none",  # discard port: connection refused
        retries=0,
        timeout=0.5,
    )
    run_dir = run_benchmark([p1], [dead], tmp_path / "run_dead")
    records = load_records(run_dir)
    assert len(records) == 6
    assert all(r["label"] == Label.OTHER.value for r in records)
    assert all("no response" in (r["parse_reason"] or "") for r in records)


def test_score_run_and_benchmark_score(tiny_datasets, tmp_path):
    iia, p1 = tiny_datasets
    agents = [parse_agent_spec("oracle")]
    run_dir = run_benchmark([iia, p1], agents, tmp_path / "run_score")
    scored = score_run(run_dir)
    assert scored["benchmark_scores"]["oracle"] == 1.0
    for row in scored["rows"]:
        assert row["wauc"] == 1.0
        assert row["breakpoint"] == ">3"
        assert row["success_pct"] == 100.0


def test_incomplete_run_detected(tiny_datasets, tmp_path):
    iia, _ = tiny_datasets
    run_dir = run_benchmark([iia], [parse_agent_spec("greedy")], tmp_path / "run_gap")
    lines = (run_dir / "records.jsonl").read_text().strip().splitlines()
    (run_dir / "records.jsonl").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(IncompleteRun) as err:
        score_run(run_dir)
    assert len(err.value.missing) == 1


def test_report_artifacts_and_byte_stability(tiny_datasets, tmp_path):
    iia, p1 = tiny_datasets
    agents = [parse_agent_spec("oracle"), parse_agent_spec("random")]
    run_dir = run_benchmark([iia, p1], agents, tmp_path / "run_rep")
    first = build_report(run_dir, out_dir=tmp_path / "rep1", fmt="csv")
    second = build_report(run_dir, out_dir=tmp_path / "rep2", fmt="csv")
    names1 = sorted(p.relative_to(tmp_path / "rep1") for p in (tmp_path / "rep1").rglob("*") if p.is_file())
    names2 = sorted(p.relative_to(tmp_path / "rep2") for p in (tmp_path / "rep2").rglob("*") if p.is_file())
    assert names1 == names2
    for rel in names1:
        assert (tmp_path / "rep1" / rel).read_bytes() == (tmp_path / "rep2" / rel).read_bytes(), rel
    assert (tmp_path / "rep1" / "summary.csv").exists()
    assert (tmp_path / "rep1" / "breakdown.csv").exists()
    assert (tmp_path / "rep1" / "breakpoints.csv").exists()
    curves = list((tmp_path / "rep1" / "curves").glob("*.csv"))
    assert len(curves) == 4  # 2 agents x 2 datasets
    figures = list((tmp_path / "rep1" / "figures").glob("*.png"))
    assert len(figures) >= 3


def test_report_json_format(tiny_datasets, tmp_path):
    iia, _ = tiny_datasets
    run_dir = run_benchmark([iia], [parse_agent_spec("greedy")], tmp_path / "run_json")
    artifacts = build_report(run_dir, fmt="json", figures=False)
    doc = json.loads(artifacts["summary"].read_text())
    assert doc["rows"][0]["agent"] == "greedy"
