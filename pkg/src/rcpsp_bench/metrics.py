"""Per-level feasibility aggregation: rates, (W)AUC, breakpoints, breakdowns."""

from __future__ import annotations

from dataclasses import dataclass

from .verifier import Label


class RangeError(IndexError):
    """Level index outside 1..K."""


class EmptyInput(ValueError):
    pass


class ContainsFeasible(ValueError):
    """Breakdowns are over failed schedules only."""


class _AboveRange:
    """Sentinel: the rate never dropped below the threshold within 1..K."""

    def __repr__(self) -> str:
        return "AboveRange"


ABOVE_RANGE = _AboveRange()


@dataclass(frozen=True)
class LevelSeries:
    """Solved/instance counts per level k = 1..K."""

    solved: tuple[int, ...]
    instances: tuple[int, ...]

    def __post_init__(self):
        if len(self.solved) != len(self.instances) or not self.solved:
            raise ValueError("solved and instances must be equal-length, non-empty")
        for s, m in zip(self.solved, self.instances):
            if m < 1 or not 0 <= s <= m:
                raise ValueError(f"bad level counts: {s}/{m}")

    @property
    def K(self) -> int:
        return len(self.solved)


def feasibility_rate(series: LevelSeries, k: int) -> float:
    if not 1 <= k <= series.K:
        raise RangeError(f"level {k} outside 1..{series.K}")
    return series.solved[k - 1] / series.instances[k - 1]


def feasibility_curve(series: LevelSeries) -> list[float]:
    return [s / m for s, m in zip(series.solved, series.instances)]


def linear_weights(K: int) -> list[float]:
    """w_k = 2k / (K (K + 1)); sums to 1 exactly (telescoping)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    denom = K * (K + 1)
    return [2 * k / denom for k in range(1, K + 1)]


def auc(series: LevelSeries) -> float:
    curve = feasibility_curve(series)
    return sum(curve) / len(curve)


def wauc(series: LevelSeries) -> float:
    curve = feasibility_curve(series)
    return sum(w * f for w, f in zip(linear_weights(series.K), curve))


def success_rate(series: LevelSeries) -> float:
    return sum(series.solved) / sum(series.instances)


def breakpoint_level(series: LevelSeries, tau: float = 0.7):
    """Smallest k with F(k) < tau (strict); ABOVE_RANGE when none."""
    if not 0 < tau <= 1:
        raise ValueError("tau must be in (0, 1]")
    for k, f in enumerate(feasibility_curve(series), start=1):
        if f < tau:
            return k
    return ABOVE_RANGE


def format_breakpoint(bp, K: int) -> str:
    return f">{K}" if isinstance(bp, _AboveRange) else str(bp)


def benchmark_score(waucs: list[float]) -> float:
    """Arithmetic mean of the high-constraint datasets' WAUC values."""
    if not waucs:
        raise EmptyInput("benchmark score needs at least one WAUC value")
    return sum(waucs) / len(waucs)


def moving_average(values: list[float], window: int = 10) -> list[float]:
    """Trailing mean; the first points average over what exists so far."""
    if window < 1:
        raise ValueError("window must be >= 1")
    out = []
    acc = 0.0
    for i, v in enumerate(values):
        acc += v
        if i >= window:
            acc -= values[i - window]
        out.append(acc / min(window, i + 1))
    return out


FAILURE_LABELS = (
    Label.PRECEDENCE,
    Label.RESOURCE_DOWNTIME,
    Label.TEMPORAL,
    Label.DISJUNCTIVE,
    Label.OTHER,
)


def infeasibility_breakdown(labels: list[Label]) -> dict[str, float]:
    """Percentage of failed schedules per taxonomy label.

    Input must come from failed instances only; an empty input yields an
    empty table rather than an error.
    """
    if any(lab is Label.FEASIBLE for lab in labels):
        raise ContainsFeasible("breakdown input contains feasible labels")
    if not labels:
        return {}
    return {
        lab.value: 100.0 * sum(1 for x in labels if x is lab) / len(labels)
        for lab in FAILURE_LABELS
    }


@dataclass(frozen=True)
class MetricsSummary:
    feasibility: tuple[float, ...]
    auc: float
    success_pct: float
    wauc: float
    bp_level: object  # int or ABOVE_RANGE
    smoothed: tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.feasibility)


def summarize(series: LevelSeries, tau: float = 0.7, window: int = 10) -> MetricsSummary:
    curve = feasibility_curve(series)
    return MetricsSummary(
        feasibility=tuple(curve),
        auc=auc(series),
        success_pct=success_rate(series),
        wauc=wauc(series),
        bp_level=breakpoint_level(series, tau),
        smoothed=tuple(moving_average(curve, window)),
    )
