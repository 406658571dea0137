import math

import pytest
from hypothesis import given, strategies as st

from rcpsp_bench.metrics import (
    ABOVE_RANGE,
    ContainsFeasible,
    EmptyInput,
    LevelSeries,
    RangeError,
    auc,
    benchmark_score,
    breakpoint_level,
    feasibility_rate,
    format_breakpoint,
    infeasibility_breakdown,
    linear_weights,
    moving_average,
    success_rate,
    summarize,
    wauc,
)
from rcpsp_bench.verifier import Label


def series_from_rates(rates, per_level=10):
    return LevelSeries(
        solved=tuple(round(r * per_level) for r in rates),
        instances=tuple(per_level for _ in rates),
    )


def test_feasibility_rate_basic():
    s = LevelSeries((7, 0, 10), (10, 10, 10))
    assert feasibility_rate(s, 1) == 0.7
    assert feasibility_rate(s, 2) == 0.0
    assert feasibility_rate(s, 3) == 1.0
    with pytest.raises(RangeError):
        feasibility_rate(s, 4)
    with pytest.raises(RangeError):
        feasibility_rate(s, 0)


@pytest.mark.parametrize("K", [1, 10, 200, 1000])
def test_linear_weights_sum_to_one(K):
    w = linear_weights(K)
    assert abs(sum(w) - 1.0) <= 1e-12
    assert all(w[i] < w[i + 1] for i in range(K - 1))


def test_linear_weights_values():
    assert linear_weights(1) == [1.0]
    w200 = linear_weights(200)
    assert math.isclose(w200[-1], 400 / 40200)


def test_wauc_extremes_and_hand_value():
    assert wauc(series_from_rates([1.0] * 8)) == pytest.approx(1.0)
    assert wauc(series_from_rates([0.0] * 8)) == 0.0
    # K=2, F=(1,0): w1 = 2/6 -> 1/3
    assert wauc(series_from_rates([1.0, 0.0])) == pytest.approx(1 / 3)


def test_breakpoint_semantics():
    assert breakpoint_level(series_from_rates([1.0] * 200)) is ABOVE_RANGE
    s = series_from_rates([1.0] * 9 + [0.6] + [1.0] * 5)
    assert breakpoint_level(s, 0.7) == 10
    assert breakpoint_level(series_from_rates([0.6, 1.0]), 0.7) == 1
    # strict comparison: exactly 7/10 does not trigger at tau=0.7
    assert breakpoint_level(series_from_rates([0.7] * 5), 0.7) is ABOVE_RANGE


def test_breakpoint_monotone_in_tau():
    s = series_from_rates([1.0, 0.9, 0.8, 0.5, 0.2])
    previous = None
    for tau in (0.95, 0.85, 0.6, 0.3, 0.1):
        bp = breakpoint_level(s, tau)
        value = s.K + 1 if bp is ABOVE_RANGE else bp
        if previous is not None:
            assert value >= previous
        previous = value


def test_format_breakpoint():
    assert format_breakpoint(ABOVE_RANGE, 200) == ">200"
    assert format_breakpoint(25, 200) == "25"


def test_benchmark_score_reference_rows():
    assert f"{benchmark_score([0.924, 0.661]):.3f}" == "0.792"
    assert f"{benchmark_score([0.931, 0.214]):.3f}" == "0.572"
    assert benchmark_score([0.5]) == 0.5
    with pytest.raises(EmptyInput):
        benchmark_score([])


def test_moving_average():
    assert moving_average([0.4] * 6, 10) == [0.4] * 6
    assert moving_average([0.0, 1.0], 2) == [0.0, 0.5]
    impulse = [1.0] + [0.0] * 14
    smoothed = moving_average(impulse, 10)
    assert smoothed[0] == 1.0
    assert smoothed[9] == pytest.approx(0.1)
    assert smoothed[10] == 0.0
    assert len(smoothed) == len(impulse)


def test_infeasibility_breakdown():
    labels = [Label.PRECEDENCE, Label.PRECEDENCE, Label.OTHER, Label.DISJUNCTIVE]
    table = infeasibility_breakdown(labels)
    assert table["precedence"] == 50.0
    assert table["other"] == 25.0
    assert table["disjunctive"] == 25.0
    assert table["temporal"] == 0.0
    assert sum(table.values()) == pytest.approx(100.0)
    assert infeasibility_breakdown([Label.OTHER] * 4)["other"] == 100.0
    assert infeasibility_breakdown([]) == {}
    with pytest.raises(ContainsFeasible):
        infeasibility_breakdown([Label.FEASIBLE])


def test_success_equals_auc_for_constant_instances():
    s = series_from_rates([1.0, 0.5, 0.3, 0.9])
    assert success_rate(s) == pytest.approx(auc(s))


@given(
    st.lists(st.integers(min_value=0, max_value=10), min_size=1, max_size=50).map(
        lambda solved: LevelSeries(tuple(solved), tuple(10 for _ in solved))
    ),
    st.lists(st.integers(min_value=0, max_value=10), min_size=1, max_size=50).map(
        lambda solved: LevelSeries(tuple(solved), tuple(10 for _ in solved))
    ),
)
def test_dominance_monotonicity(s1, s2):
    K = min(s1.K, s2.K)
    a = LevelSeries(s1.solved[:K], s1.instances[:K])
    hi = tuple(max(x, y) for x, y in zip(s1.solved[:K], s2.solved[:K]))
    b = LevelSeries(hi, s1.instances[:K])
    assert wauc(b) >= wauc(a) - 1e-12
    assert auc(b) >= auc(a) - 1e-12


def test_summarize_bundles_everything():
    s = series_from_rates([1.0, 0.8, 0.4])
    summary = summarize(s, tau=0.7, window=2)
    assert summary.K == 3
    assert summary.bp_level == 3
    assert summary.success_pct == pytest.approx((10 + 8 + 4) / 30)
    assert summary.smoothed == (1.0, 0.9, 0.6)
