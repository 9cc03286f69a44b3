"""Fixed-point iteration schemes with full trace recording.

Schemes (``T`` the mapping, ``a_n``/``b_n`` step sequences in (0, 1)):

khan      g_n = (1 - a_n) f_n + a_n T f_n,   f_{n+1} = T g_n
picard    f_{n+1} = T f_n
mann      f_{n+1} = (1 - a_n) f_n + a_n T f_n
ishikawa  g_n = (1 - b_n) f_n + b_n T f_n,   f_{n+1} = (1 - a_n) f_n + a_n T g_n

Counting convention: iteration ``n`` consumes ``f_n`` and produces
``f_{n+1}``; the stop rule is tested on ``f_{n+1}`` and the first ``n`` for
which it holds is the reported iteration count. Under this convention the
worked example (``T f = (2f + 1)/3``, ``f_1 = 4``, ``a_n = 0.5``) reaches
``|f_{n+1} - 1| < 1e-5`` at ``n = 22``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from modfix.errors import EvaluationError, ParameterError
from modfix.mappings import apply_mapping
from modfix.modular import eval_modular
from modfix.space import convex_combine, fnvec

__all__ = [
    "StepSequence", "Scheme", "StopRule", "StepRecord", "IterationTrace",
    "khan_step", "picard_step", "mann_step", "ishikawa_step", "run",
    "contraction_factor", "STREAMING_THRESHOLD",
]

STREAMING_THRESHOLD = 10**6
FACTOR_CUTOFF = 1e-13


@dataclass(frozen=True)
class StepSequence:
    """Constant or tabulated step sizes, kept inside ``[lower, upper]``.

    ``lower``/``upper`` default to the extreme terms and must satisfy
    ``0 < lower <= upper < 1``. A table repeats its last entry once exhausted.
    """

    values: tuple
    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        if not values:
            raise ParameterError("step sequence needs at least one term")
        lower = min(values) if self.lower is None else float(self.lower)
        upper = max(values) if self.upper is None else float(self.upper)
        if not 0.0 < lower <= upper < 1.0:
            raise ParameterError(f"step bounds must satisfy 0 < a <= b < 1, got [{lower}, {upper}]")
        for v in values:
            if not lower <= v <= upper:
                raise ParameterError(f"step term {v} outside [{lower}, {upper}]")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def constant(cls, c):
        return cls((c,))

    @classmethod
    def table(cls, values, lower=None, upper=None):
        return cls(tuple(values), lower, upper)

    def __getitem__(self, n):
        """Term for iteration ``n`` (1-based)."""
        return self.values[min(n, len(self.values)) - 1]

    @property
    def is_constant(self):
        return len(self.values) == 1

    def describe(self):
        if self.is_constant:
            return f"{self.values[0]:g}"
        return "[" + ",".join(f"{v:g}" for v in self.values) + "]"


@dataclass(frozen=True)
class Scheme:
    kind: str
    beta: Optional[StepSequence] = None

    KINDS = ("khan", "picard", "mann", "ishikawa")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown scheme {self.kind!r}")
        if self.kind == "ishikawa" and self.beta is None:
            raise ParameterError("ishikawa scheme requires a beta sequence")

    @classmethod
    def khan(cls):
        return cls("khan")

    @classmethod
    def picard(cls):
        return cls("picard")

    @classmethod
    def mann(cls):
        return cls("mann")

    @classmethod
    def ishikawa(cls, beta):
        if not isinstance(beta, StepSequence):
            beta = StepSequence.constant(beta)
        return cls("ishikawa", beta)

    @property
    def name(self):
        return self.kind


@dataclass(frozen=True)
class StopRule:
    """When to stop: ``kind`` is one of

    * ``residual_to_fixed_point``: ``rho(f_{n+1} - w) < tol``
    * ``self_residual``: ``rho(f_{n+1} - T f_{n+1}) < tol``
    * ``step_residual``: ``rho(f_{n+1} - f_n) < tol``
    """

    kind: str
    tol: float
    max_iter: int
    w: Optional[np.ndarray] = field(default=None, compare=False)

    KINDS = ("residual_to_fixed_point", "self_residual", "step_residual")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown stop rule {self.kind!r}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ParameterError("tol must be > 0")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError("max_iter must be an integer >= 1")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        if self.kind == "residual_to_fixed_point":
            if self.w is None:
                raise ParameterError("residual_to_fixed_point needs a fixed point w")
            object.__setattr__(self, "w", fnvec(self.w))

    @classmethod
    def to_fixed_point(cls, w, tol, max_iter=10_000):
        return cls("residual_to_fixed_point", tol, max_iter, w)

    @classmethod
    def self_residual(cls, tol, max_iter=10_000):
        return cls("self_residual", tol, max_iter)

    @classmethod
    def step_residual(cls, tol, max_iter=10_000):
        return cls("step_residual", tol, max_iter)


@dataclass(frozen=True)
class StepRecord:
    """One iteration. Vector fields are ``None`` in streaming mode."""

    n: int
    f: Optional[np.ndarray]
    Tf: Optional[np.ndarray]
    g: Optional[np.ndarray]
    f_next: Optional[np.ndarray]
    alpha: Optional[float]
    rho_self_residual: float
    rho_to_w: Optional[float]


@dataclass(frozen=True)
class IterationTrace:
    """All steps of one run.

    ``rho_self_residual`` of record ``n`` is ``rho(f_n - T f_n)``;
    ``rho_to_w`` is ``rho(f_{n+1} - w)`` when the stop rule carries ``w``.
    """

    scheme: Scheme
    records: tuple
    stop_reason: str
    final: np.ndarray
    streaming: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def iterations(self):
        return len(self.records)

    @property
    def converged(self):
        return self.stop_reason == "tolerance_met"

    def iterates(self):
        """``f_1, ..., f_{N+1}`` (full traces only)."""
        if self.streaming:
            raise ParameterError("streaming trace does not store iterates")
        return [r.f for r in self.records] + [self.records[-1].f_next]


def khan_step(T, f, alpha):
    """One step of the two-stage process; returns ``(Tf, g, f_next)``."""
    _check_step(alpha)
    Tf = apply_mapping(T, f)
    g = convex_combine(f, Tf, alpha)
    return Tf, g, apply_mapping(T, g)


def picard_step(T, f):
    return apply_mapping(T, f)


def mann_step(T, f, alpha):
    _check_step(alpha)
    return convex_combine(f, apply_mapping(T, f), alpha)


def ishikawa_step(T, f, alpha, beta):
    _check_step(alpha)
    _check_step(beta)
    g = convex_combine(f, apply_mapping(T, f), beta)
    return convex_combine(f, apply_mapping(T, g), alpha)


def _check_step(a):
    if not 0.0 < a < 1.0:
        raise ParameterError(f"step size must lie in (0, 1), got {a}")


def _advance(scheme, T, f, alpha, n):
    """Return ``(Tf, g, f_next)`` for any scheme; ``g`` is ``None`` when unused."""
    if scheme.kind == "khan":
        return khan_step(T, f, alpha)
    Tf = apply_mapping(T, f)
    if scheme.kind == "picard":
        return Tf, None, Tf
    if scheme.kind == "mann":
        _check_step(alpha)
        return Tf, None, convex_combine(f, Tf, alpha)
    beta = scheme.beta[n]
    _check_step(alpha)
    _check_step(beta)
    g = convex_combine(f, Tf, beta)
    return Tf, g, convex_combine(f, apply_mapping(T, g), alpha)


def run(scheme, T, f1, steps, stop, rho, grid, streaming=None):
    """Iterate ``scheme`` from ``f1`` until ``stop`` fires or ``max_iter`` is hit.

    ``steps`` may be ``None`` for Picard. ``streaming`` drops the vectors from
    the records and keeps only scalar residuals; by default it switches on
    when ``stop.max_iter`` exceeds one million.

    A mapping evaluation failure re-raises the :class:`EvaluationError` with
    ``.trace`` set to the partial trace.
    """
    if scheme.kind != "picard" and steps is None:
        raise ParameterError(f"{scheme.kind} scheme needs a step sequence")
    if streaming is None:
        streaming = stop.max_iter > STREAMING_THRESHOLD
    f = fnvec(f1, grid)
    w = stop.w
    if w is not None:
        w = fnvec(w, grid)
    records = []

    def residual(v, Tv):
        return eval_modular(rho, grid, v - Tv)

    stop_reason = "max_iter"
    try:
        for n in range(1, stop.max_iter + 1):
            alpha = steps[n] if (steps is not None and scheme.kind != "picard") else None
            Tf, g, f_next = _advance(scheme, T, f, alpha, n)
            to_w = eval_modular(rho, grid, f_next - w) if w is not None else None

            if stop.kind == "residual_to_fixed_point":
                met = to_w < stop.tol
            elif stop.kind == "self_residual":
                met = residual(f_next, apply_mapping(T, f_next)) < stop.tol
            else:
                met = eval_modular(rho, grid, f_next - f) < stop.tol

            keep = not streaming
            records.append(StepRecord(
                n=n,
                f=f if keep else None,
                Tf=Tf if keep else None,
                g=g if keep else None,
                f_next=f_next if keep else None,
                alpha=alpha,
                rho_self_residual=residual(f, Tf),
                rho_to_w=to_w,
            ))
            f = f_next
            if met:
                stop_reason = "tolerance_met"
                break
    except EvaluationError as exc:
        exc.trace = IterationTrace(scheme, tuple(records), "error", f, streaming)
        raise
    return IterationTrace(scheme, tuple(records), stop_reason, f, streaming)


def contraction_factor(trace, w, rho, grid):
    """Geometric mean of ``rho(f_{n+1} - w) / rho(f_n - w)`` along the trace.

    Only the leading steps whose denominator is at least ``1e-13`` are used.
    """
    if trace.streaming:
        raise ParameterError("contraction factor needs a full trace")
    if len(trace) < 3:
        raise ParameterError("trace too short for a contraction factor (need >= 3 steps)")
    w = fnvec(w, grid)
    logs = []
    for rec in trace.records:
        den = eval_modular(rho, grid, rec.f - w)
        if den < FACTOR_CUTOFF:
            break
        num = eval_modular(rho, grid, rec.f_next - w)
        if num == 0.0:
            break
        logs.append(math.log(num / den))
    if not logs:
        raise ParameterError("all residuals are below the cutoff")
    return math.exp(math.fsum(logs) / len(logs))
