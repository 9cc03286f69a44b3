import dataclasses
import math

import numpy as np
import pytest

from modfix import (
    Expression, ParameterError, Scheme, StepSequence, StopRule, compare_schemes,
    diagnose, dist_series, fejer_check, residual_series, run,
)
from modfix.iterate import IterationTrace, StepRecord


def constant_trace(value, steps):
    v = np.array([value])
    recs = tuple(StepRecord(n, v, v, v, v, 0.5, 0.0, 0.0) for n in range(1, steps + 1))
    return IterationTrace(Scheme.khan(), recs, "max_iter", v)


@pytest.fixture
def example_trace(scalar, absolute, example_map, half, stop_1e5):
    return run(Scheme.khan(), example_map, 4.0, half, stop_1e5, absolute, scalar)


def test_fejer_example(example_trace, absolute, scalar):
    violations, slack = fejer_check(example_trace, 1.0, absolute, scalar)
    assert violations == 0 and slack < 0


def test_fejer_constant_trace(scalar, absolute, example_map, half):
    trace = constant_trace(1.0, 4)
    assert fejer_check(trace, 1.0, absolute, scalar) == (0, 0.0)


def test_fejer_injected_increase(example_trace, absolute, scalar):
    recs = list(example_trace.records)
    bumped = np.array([recs[5].f[0] + 0.5])
    recs[5] = dataclasses.replace(recs[5], f_next=bumped)
    trace = dataclasses.replace(example_trace, records=tuple(recs))
    violations, slack = fejer_check(trace, 1.0, absolute, scalar)
    assert violations == 1 and slack == pytest.approx(0.5)


def test_residual_series(example_trace):
    res = residual_series(example_trace)
    assert res[0] == 1.0
    assert all(b < a for a, b in zip(res, res[1:]))
    # closed form: residual_n = (f_n - 1)/3 with f_n - 1 = 3 (5/9)^(n-1)
    for n, r in enumerate(res, start=1):
        assert r == pytest.approx((5 / 9) ** (n - 1), rel=1e-12)


def test_dist_series(example_trace, absolute, scalar):
    series, nonincreasing = dist_series(example_trace, [1.0], absolute, scalar)
    assert nonincreasing
    assert [f"{v:.6f}" for v in series[:3]] == ["3.000000", "1.666667", "0.925926"]
    series2, _ = dist_series(example_trace, [1.0, 100.0], absolute, scalar)
    assert series2 == series
    with pytest.raises(ParameterError):
        dist_series(example_trace, [], absolute, scalar)


def test_dist_series_at_fixed_point(scalar, absolute, example_map, half):
    trace = constant_trace(1.0, 3)
    assert dist_series(trace, [1.0], absolute, scalar) == ([0.0, 0.0, 0.0], True)


def test_diagnose(example_trace, absolute, scalar):
    rep = diagnose(example_trace, absolute, scalar, w=1.0)
    assert rep.iterations == 22 and rep.stop_reason == "tolerance_met"
    assert rep.fejer_violations == 0
    assert rep.contraction_factor == pytest.approx(5 / 9, abs=1e-9)
    assert rep.final_dist_to_fps == pytest.approx(3 * (5 / 9) ** 22, rel=1e-9)
    bare = diagnose(example_trace, absolute, scalar)
    assert bare.fejer_violations is None and bare.final_dist_to_fps is None


def _four(alpha=0.5):
    s = StepSequence.constant(alpha)
    return [(Scheme.mann(), s), (Scheme.ishikawa(alpha), s), (Scheme.picard(), None),
            (Scheme.khan(), s)]


def test_compare_schemes_order(scalar, absolute, example_map, stop_1e5):
    rows = compare_schemes(_four(), example_map, 4.0, stop_1e5, absolute, scalar)
    assert [r.label for r in rows] == ["khan", "picard", "ishikawa", "mann"]
    assert rows[0].iterations == 22 and rows[1].iterations == 32
    for r, k in zip(rows, (5 / 9, 2 / 3, 7 / 9, 5 / 6)):
        assert r.contraction_factor == pytest.approx(k, abs=1e-9)
        # closed-form count: smallest n with 3 k^n < 1e-5
        assert r.iterations == math.floor(math.log(1e-5 / 3) / math.log(k)) + 1


def test_compare_at_fixed_point(scalar, absolute, example_map, stop_1e5):
    rows = compare_schemes(_four(), example_map, 1.0, stop_1e5, absolute, scalar)
    assert all(r.iterations == 1 for r in rows)
    assert [r.label for r in rows] == sorted(r.label for r in rows)


def test_compare_is_deterministic(scalar, absolute, example_map, stop_1e5):
    a = compare_schemes(_four(), example_map, 4.0, stop_1e5, absolute, scalar)
    b = compare_schemes(_four(), example_map, 4.0, stop_1e5, absolute, scalar)
    assert a == b


def test_compare_keeps_going_after_error(scalar, absolute, example_map, half, stop_1e5):
    # mann without a step sequence fails; the khan row must still be produced
    rows = compare_schemes([(Scheme.mann(), None), (Scheme.khan(), half)], example_map, 4.0,
                           stop_1e5, absolute, scalar)
    assert [r.label for r in rows] == ["khan", "mann"]
    assert rows[0].iterations == 22 and rows[0].error is None
    assert rows[1].stop_reason == "error" and "step sequence" in rows[1].error


def test_compare_evaluation_error_row(scalar, absolute, half):
    # picard on sqrt(f - 1.5) from 10 hits sqrt of a negative on step 3
    rows = compare_schemes([(Scheme.picard(), None), (Scheme.khan(), half)],
                           Expression("sqrt(f - 1.5)"), 10.0,
                           StopRule.step_residual(1e-6, 50), absolute, scalar)
    picard = next(r for r in rows if r.label == "picard")
    assert picard.error is not None and picard.iterations is None


def test_compare_alpha_labels(scalar, absolute, example_map, stop_1e5):
    specs = [(Scheme.khan(), StepSequence.constant(a)) for a in (0.25, 0.5, 0.75)]
    rows = compare_schemes(specs, example_map, 4.0, stop_1e5, absolute, scalar, label_alpha=True)
    assert [(r.label, r.iterations) for r in rows] == [
        ("khan(alpha=0.75)", 19), ("khan(alpha=0.5)", 22), ("khan(alpha=0.25)", 26)]
