"""Scheduling agents: built-in baselines and a minimal HTTP endpoint client.

Built-ins answer in the same JSON response format the prompt asks for,
so every agent goes through the identical parse-then-verify path.  The
HTTP contract is deliberately small: POST {prompt, temperature,
max_tokens}, read back {"completion": "..."} (or the raw body); vendor
adapters belong behind an endpoint speaking this shape.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from random import Random

import requests

from .generator import sub_seed
from .model import Instance, Schedule, topological_order
from .prompts import format_response
from .solver import Status, solve_feasibility


class AgentKind(str, Enum):
    HTTP_ENDPOINT = "http"
    ORACLE_SOLVER = "oracle"
    RANDOM_SCHEDULER = "random"
    GREEDY_TOPOLOGICAL = "greedy"


class TransportError(RuntimeError):
    """No usable response from the endpoint (after retries)."""


@dataclass(frozen=True)
class AgentSpec:
    kind: AgentKind
    name: str
    url: str | None = None
    token_env: str = "RCPSP_BENCH_API_TOKEN"
    timeout: float = 120.0
    retries: int = 2
    max_output_tokens: int = 16384
    temperature: float = 0.0
    requests_per_second: float | None = None

    def __post_init__(self):
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.kind is AgentKind.HTTP_ENDPOINT and not self.url:
            raise ValueError("http agents need a url")


def parse_agent_spec(text: str) -> AgentSpec:
    """CLI shorthand: oracle | random | greedy | http:<url>."""
    if text in ("oracle", "random", "greedy"):
        return AgentSpec(kind=AgentKind(text), name=text)
    if text.startswith("http:"):
        url = text[len("http:"):]
        return AgentSpec(kind=AgentKind.HTTP_ENDPOINT, name=f"http:{url}", url=url)
    raise ValueError(f"unknown agent spec {text!r}")


def respond(spec: AgentSpec, instance: Instance, prompt: str) -> tuple[str, int]:
    """One response for one instance; returns (text, transport attempts)."""
    if spec.kind is AgentKind.ORACLE_SOLVER:
        return _oracle_response(instance), 1
    if spec.kind is AgentKind.RANDOM_SCHEDULER:
        return _random_response(spec, instance), 1
    if spec.kind is AgentKind.GREEDY_TOPOLOGICAL:
        return _greedy_response(instance), 1
    return _http_completion(spec, prompt)


def _oracle_response(instance: Instance) -> str:
    # No wall-clock cap: oracle output must not depend on machine speed.
    outcome = solve_feasibility(instance, node_budget=1_000_000, time_limit=None)
    if outcome.status is not Status.FEASIBLE:
        raise TransportError(f"oracle search ended {outcome.status.value}")
    return format_response(instance, outcome.witness)


def _random_response(spec: AgentSpec, instance: Instance) -> str:
    rng = Random(sub_seed(instance.meta.seed, spec.name))
    starts = {
        t.id: rng.randint(0, max(0, instance.horizon - t.duration))
        for t in instance.tasks
    }
    return format_response(instance, Schedule(starts=starts))


def _greedy_response(instance: Instance) -> str:
    # Earliest precedence-respecting start; blind to resources and windows.
    starts: dict[str, int] = {}
    ends: dict[str, int] = {}
    preds: dict[str, list[str]] = {t.id: [] for t in instance.tasks}
    for e in instance.edges:
        preds[e.succ].append(e.pred)
    for tid in topological_order(instance):
        s = max((ends[p] for p in preds[tid]), default=0)
        starts[tid] = s
        ends[tid] = s + instance.task(tid).duration
    return format_response(instance, Schedule(starts=starts))


_rate_lock = threading.Lock()
_last_request: dict[str, float] = {}


def _respect_rate_limit(spec: AgentSpec) -> None:
    if spec.requests_per_second is None:
        return
    interval = 1.0 / spec.requests_per_second
    with _rate_lock:
        now = time.monotonic()
        wait = _last_request.get(spec.url, 0.0) + interval - now
        _last_request[spec.url] = max(now, _last_request.get(spec.url, 0.0) + interval)
    if wait > 0:
        time.sleep(wait)


def _http_completion(spec: AgentSpec, prompt: str) -> tuple[str, int]:
    headers = {}
    token = os.environ.get(spec.token_env or "", "")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = {
        "prompt": prompt,
        "temperature": spec.temperature,
        "max_tokens": spec.max_output_tokens,
    }
    last_error: Exception | None = None
    for attempt in range(1, spec.retries + 2):
        _respect_rate_limit(spec)
        try:
            resp = requests.post(
                spec.url, json=payload, headers=headers, timeout=spec.timeout
            )
        except requests.RequestException as exc:
            last_error = exc
            time.sleep(min(8.0, 0.5 * 2 ** (attempt - 1)))
            continue
        if resp.status_code >= 500:
            last_error = TransportError(f"HTTP {resp.status_code}")
            time.sleep(min(8.0, 0.5 * 2 ** (attempt - 1)))
            continue
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
        except ValueError:
            return resp.text, attempt
        if isinstance(body, dict) and isinstance(body.get("completion"), str):
            return body["completion"], attempt
        return resp.text, attempt
    raise TransportError(f"no response after {spec.retries + 1} attempts: {last_error}")
