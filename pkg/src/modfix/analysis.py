"""Post-hoc convergence diagnostics over iteration traces."""

from dataclasses import dataclass
from typing import Optional

from modfix.errors import ModfixError, ParameterError
from modfix.iterate import contraction_factor, run
from modfix.modular import VIOLATION_SLACK, eval_modular, rho_distance
from modfix.space import fnvec

__all__ = [
    "DiagnosticsReport", "ComparisonRow", "fejer_check", "residual_series",
    "dist_series", "diagnose", "compare_schemes",
]


def _full(trace):
    if trace.streaming:
        raise ParameterError("diagnostic needs a trace with stored iterates")
    if not trace.records:
        raise ParameterError("empty trace")


def fejer_check(trace, w, rho, grid):
    """Count steps with ``rho(f_{n+1} - w) > rho(f_n - w) + 1e-12``.

    Returns ``(violations, max_slack)`` where ``max_slack`` is the largest
    observed increase ``rho(f_{n+1} - w) - rho(f_n - w)``; it is negative for
    a strictly Fejer-monotone trace and 0 for a constant one.
    """
    _full(trace)
    w = fnvec(w, grid)
    violations = 0
    max_slack = None
    for rec in trace.records:
        inc = eval_modular(rho, grid, rec.f_next - w) - eval_modular(rho, grid, rec.f - w)
        if inc > VIOLATION_SLACK:
            violations += 1
        max_slack = inc if max_slack is None else max(max_slack, inc)
    return violations, max_slack


def residual_series(trace):
    """``rho(f_n - T f_n)`` for each recorded step."""
    return [rec.rho_self_residual for rec in trace.records]


def dist_series(trace, fixed_points, rho, grid):
    """Per-step ``dist_rho(f_n, fixed_points)`` and whether it never increases."""
    _full(trace)
    fixed_points = [fnvec(w, grid) for w in fixed_points]
    if not fixed_points:
        raise ParameterError("dist_series needs at least one fixed point")
    series = [rho_distance(rho, grid, rec.f, fixed_points) for rec in trace.records]
    nonincreasing = all(b <= a + VIOLATION_SLACK for a, b in zip(series, series[1:]))
    return series, nonincreasing


@dataclass(frozen=True)
class DiagnosticsReport:
    iterations: int
    stop_reason: str
    final_self_residual: float
    fejer_violations: Optional[int] = None
    max_fejer_slack: Optional[float] = None
    final_dist_to_fps: Optional[float] = None
    contraction_factor: Optional[float] = None


def diagnose(trace, rho, grid, w=None, fixed_points=None):
    """Bundle the diagnostics available for ``trace`` into one report."""
    _full(trace)
    fejer = (None, None)
    factor = None
    if w is not None:
        fejer = fejer_check(trace, w, rho, grid)
        try:
            factor = contraction_factor(trace, w, rho, grid)
        except ParameterError:
            factor = None
        if fixed_points is None:
            fixed_points = [w]
    final_dist = None
    if fixed_points:
        final_dist = rho_distance(rho, grid, trace.final, [fnvec(v, grid) for v in fixed_points])
    return DiagnosticsReport(
        iterations=trace.iterations,
        stop_reason=trace.stop_reason,
        final_self_residual=trace.records[-1].rho_self_residual,
        fejer_violations=fejer[0],
        max_fejer_slack=fejer[1],
        final_dist_to_fps=final_dist,
        contraction_factor=factor,
    )


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    iterations: Optional[int]
    contraction_factor: Optional[float]
    final_residual: Optional[float]
    stop_reason: str
    error: Optional[str] = None


def _label(scheme, steps, with_alpha):
    if not with_alpha or steps is None:
        return scheme.name
    label = f"{scheme.name}(alpha={steps.describe()}"
    if scheme.beta is not None:
        label += f",beta={scheme.beta.describe()}"
    return label + ")"


def compare_schemes(specs, T, f1, stop, rho, grid, label_alpha=False):
    """Run every ``(scheme, steps)`` pair under the same stop rule.

    Rows are sorted by iteration count, ties broken by label; rows whose run
    failed carry the error message and sort last. ``label_alpha`` adds the
    step sizes to each label, which keeps sweep rows distinguishable.
    """
    specs = list(specs)
    if len(specs) < 1:
        raise ParameterError("compare_schemes needs at least one scheme")
    rows = []
    for scheme, steps in specs:
        label = _label(scheme, steps, label_alpha)
        try:
            trace = run(scheme, T, f1, steps, stop, rho, grid)
        except ModfixError as exc:
            rows.append(ComparisonRow(label, None, None, None, "error", str(exc)))
            continue
        factor = None
        if stop.w is not None:
            try:
                factor = contraction_factor(trace, stop.w, rho, grid)
            except ParameterError:
                factor = None
        last = trace.records[-1]
        final = last.rho_to_w if last.rho_to_w is not None else last.rho_self_residual
        rows.append(ComparisonRow(label, trace.iterations, factor, final, trace.stop_reason))
    rows.sort(key=lambda r: (r.iterations is None, r.iterations or 0, r.label))
    return rows
