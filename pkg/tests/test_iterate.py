import math
from fractions import Fraction

import numpy as np
import pytest

from modfix import (
    Affine, EvaluationError, Expression, MeasureGrid, ModularFn, ParameterError, Scheme,
    StepSequence, StopRule, contraction_factor, ishikawa_step, khan_step, mann_step,
    picard_step, run,
)

# rows of the worked example's table: n -> (f_n, Tf_n, g_n, f_{n+1})
EXPECTED_TABLE = {
    1: ("4.000000", "3.000000", "3.500000", "2.666667"),
    2: ("2.666667", "2.111111", "2.388889", "1.925926"),
    3: ("1.925926", "1.617284", "1.771605", "1.514403"),
    4: ("1.514403", "1.342936", "1.428669", "1.285780"),
    5: ("1.285780", "1.190520", "1.238150", "1.158766"),
    10: ("1.015124", "1.010083", "1.012603", "1.008402"),
    15: ("1.000800", "1.000534", "1.000667", "1.000445"),
    20: ("1.000042", "1.000028", "1.000035", "1.000024"),
    22: ("1.000013", "1.000009", "1.000011", "1.000007"),
}


def exact_khan(alpha, tol, f1=4):
    """Rational-arithmetic run of the example; returns (count, rows)."""
    alpha, f = Fraction(alpha), Fraction(f1)
    T = lambda x: (2 * x + 1) / 3
    rows = []
    while True:
        tf = T(f)
        g = (1 - alpha) * f + alpha * tf
        rows.append((f, tf, g, T(g)))
        f = T(g)
        if abs(f - 1) < Fraction(tol):
            return len(rows), rows


def test_khan_step_rows(example_map):
    Tf, g, nxt = khan_step(example_map, 4.0, 0.5)
    assert (Tf[0], g[0]) == (3.0, 3.5)
    assert f"{nxt[0]:.6f}" == "2.666667"
    Tf, g, nxt = khan_step(example_map, 2.666667, 0.5)
    assert [f"{v[0]:.6f}" for v in (Tf, g, nxt)] == ["2.111111", "2.388889", "1.925926"]
    assert [v[0] for v in khan_step(example_map, 1.0, 0.5)] == [1.0, 1.0, 1.0]


def test_baseline_steps(example_map):
    assert picard_step(example_map, 4.0)[0] == 3.0
    assert mann_step(example_map, 4.0, 0.5)[0] == 3.5
    assert ishikawa_step(example_map, 4.0, 0.5, 0.5)[0] == pytest.approx(10 / 3, abs=1e-15)


def test_step_guards(example_map):
    with pytest.raises(ParameterError):
        khan_step(example_map, 4.0, 1.0)
    with pytest.raises(ParameterError):
        ishikawa_step(example_map, 4.0, 0.5, 0.0)


def test_golden_trace(scalar, absolute, example_map, half, stop_1e5):
    trace = run(Scheme.khan(), example_map, 4.0, half, stop_1e5, absolute, scalar)
    assert trace.iterations == 22 and trace.stop_reason == "tolerance_met"
    for rec in trace.records:
        if rec.n in EXPECTED_TABLE:
            got = tuple(f"{v[0]:.6f}" for v in (rec.f, rec.Tf, rec.g, rec.f_next))
            assert got == EXPECTED_TABLE[rec.n], rec.n


def test_trace_matches_rational_oracle(scalar, absolute, example_map, half, stop_1e5):
    trace = run(Scheme.khan(), example_map, 4.0, half, stop_1e5, absolute, scalar)
    count, rows = exact_khan(Fraction(1, 2), Fraction(1, 10**5))
    assert count == trace.iterations
    for rec, exact in zip(trace.records, rows):
        for got, want in zip((rec.f, rec.Tf, rec.g, rec.f_next), exact):
            assert got[0] == pytest.approx(float(want), abs=1e-14)


def test_records_are_contiguous(scalar, absolute, example_map, half, stop_1e5):
    trace = run(Scheme.khan(), example_map, 4.0, half, stop_1e5, absolute, scalar)
    assert [r.n for r in trace.records] == list(range(1, 23))
    for a, b in zip(trace.records, trace.records[1:]):
        assert a.f_next is b.f
    assert trace.final is trace.records[-1].f_next


@pytest.mark.parametrize("alpha, tol, expected", [
    (0.5, 1e-5, 22), (0.75, 1e-5, 19), (0.25, 1e-5, 26), (0.5, 1e-10, 42),
])
def test_iteration_counts(scalar, absolute, example_map, alpha, tol, expected):
    trace = run(Scheme.khan(), example_map, 4.0, StepSequence.constant(alpha),
                StopRule.to_fixed_point(1.0, tol), absolute, scalar)
    assert trace.iterations == expected
    assert exact_khan(Fraction(alpha), Fraction(tol))[0] == expected


def test_picard_count_closed_form(scalar, absolute, example_map, stop_1e5):
    trace = run(Scheme.picard(), example_map, 4.0, None, stop_1e5, absolute, scalar)
    # smallest k with 3 (2/3)^k < 1e-5
    assert trace.iterations == math.floor(math.log(1e-5 / 3) / math.log(2 / 3)) + 1 == 32


def test_max_iter(scalar, absolute, example_map, half):
    trace = run(Scheme.khan(), example_map, 4.0, half,
                StopRule.to_fixed_point(1.0, 1e-5, max_iter=5), absolute, scalar)
    assert trace.stop_reason == "max_iter" and trace.iterations == 5


def test_other_stop_rules(scalar, absolute, example_map, half):
    t1 = run(Scheme.khan(), example_map, 4.0, half, StopRule.self_residual(1e-8), absolute, scalar)
    assert t1.converged
    assert abs(t1.final[0] - 1) / 3 < 1e-8
    t2 = run(Scheme.mann(), example_map, 4.0, half, StopRule.step_residual(1e-8), absolute, scalar)
    assert t2.converged
    last = t2.records[-1]
    assert abs(last.f_next[0] - last.f[0]) < 1e-8


def test_residual_decay(scalar, absolute, example_map, half):
    trace = run(Scheme.khan(), example_map, 4.0, half,
                StopRule.to_fixed_point(1.0, 1e-12), absolute, scalar)
    res = [r.rho_self_residual for r in trace.records]
    assert res[0] == 1.0
    assert all(b <= a for a, b in zip(res, res[1:]))
    assert res[-1] < 1e-11


def test_streaming_mode(scalar, absolute, example_map, half, stop_1e5):
    full = run(Scheme.khan(), example_map, 4.0, half, stop_1e5, absolute, scalar)
    lite = run(Scheme.khan(), example_map, 4.0, half, stop_1e5, absolute, scalar, streaming=True)
    assert lite.streaming and lite.records[0].f is None
    assert [r.rho_to_w for r in lite.records] == [r.rho_to_w for r in full.records]
    assert lite.final[0] == full.final[0]
    with pytest.raises(ParameterError):
        contraction_factor(lite, 1.0, absolute, scalar)


def test_evaluation_error_attaches_partial_trace(scalar, absolute, half):
    # 10 -> 2.915 -> 1.190 -> sqrt of a negative on the third step
    T = Expression("sqrt(f - 1.5)")
    with pytest.raises(EvaluationError) as info:
        run(Scheme.picard(), T, 10.0, None, StopRule.step_residual(1e-300, 100), absolute, scalar)
    trace = info.value.trace
    assert trace is not None and trace.stop_reason == "error"
    assert len(trace.records) >= 1


def test_step_sequence_guards():
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ParameterError):
            StepSequence.constant(bad)
    with pytest.raises(ParameterError):
        StepSequence.table([0.5, 0.99], lower=0.1, upper=0.9)
    seq = StepSequence.table([0.9, 0.7, 0.5])
    assert [seq[n] for n in range(1, 6)] == [0.9, 0.7, 0.5, 0.5, 0.5]


def test_scheme_and_stop_guards():
    with pytest.raises(ParameterError):
        Scheme("ishikawa")
    with pytest.raises(ParameterError):
        Scheme("halpern")
    with pytest.raises(ParameterError):
        StopRule("residual_to_fixed_point", 1e-5, 10)
    with pytest.raises(ParameterError):
        StopRule.self_residual(0.0)
    with pytest.raises(ParameterError):
        StopRule.self_residual(1e-3, max_iter=0)


def test_table_schedule_runs(scalar, absolute, example_map, stop_1e5):
    seq = StepSequence.table([0.9, 0.8, 0.6], lower=0.1, upper=0.95)
    trace = run(Scheme.khan(), example_map, 4.0, seq, stop_1e5, absolute, scalar)
    assert trace.converged
    assert [r.alpha for r in trace.records[:4]] == [0.9, 0.8, 0.6, 0.6]


@pytest.mark.parametrize("scheme, steps, factor", [
    (Scheme.khan(), StepSequence.constant(0.5), 5 / 9),
    (Scheme.picard(), None, 2 / 3),
    (Scheme.mann(), StepSequence.constant(0.5), 5 / 6),
    (Scheme.ishikawa(0.5), StepSequence.constant(0.5), 7 / 9),
    (Scheme.khan(), StepSequence.constant(0.25), (2 / 3) * (1 - 0.25 / 3)),
])
def test_contraction_factors(scalar, absolute, example_map, stop_1e5, scheme, steps, factor):
    trace = run(scheme, example_map, 4.0, steps, stop_1e5, absolute, scalar)
    assert contraction_factor(trace, 1.0, absolute, scalar) == pytest.approx(factor, abs=1e-9)


def test_contraction_factor_guards(scalar, absolute, example_map, half):
    short = run(Scheme.khan(), example_map, 4.0, half,
                StopRule.to_fixed_point(1.0, 1e-5, max_iter=2), absolute, scalar)
    with pytest.raises(ParameterError):
        contraction_factor(short, 1.0, absolute, scalar)
    at_fp = run(Scheme.khan(), example_map, 1.0, half,
                StopRule.step_residual(1e-30, max_iter=5), absolute, scalar)
    with pytest.raises(ParameterError):
        contraction_factor(at_fp, 1.0, absolute, scalar)


def test_vector_run_power_modular():
    grid = MeasureGrid.uniform(4)
    rho = ModularFn.power(2)
    T = Affine(0.5, 1.0)
    w = np.full(4, 2.0)
    trace = run(Scheme.khan(), T, [5.0, -1.0, 0.0, 9.0], StepSequence.constant(0.5),
                StopRule.to_fixed_point(w, 1e-20), rho, grid)
    assert trace.converged
    # squared error contracts by (0.5 * (1 - 0.5 * 0.5))^2 per step
    assert contraction_factor(trace, w, rho, grid) == pytest.approx(0.375 ** 2, rel=1e-9)
