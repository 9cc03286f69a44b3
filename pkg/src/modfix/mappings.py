"""Pointwise self-mappings and sampled verification of their mapping class.

Three classes are checked, each by searching seeded samples for a violated
inequality (``rho`` a modular, ``lam`` in (0, 1)):

firm          rho(Tf - Tg) <= rho((1 - lam)(f - g) + lam (Tf - Tg))
nonexpansive  rho(Tf - Tg) <= rho(f - g)
condition_I   rho(f - Tf)  >= ell(dist_rho(f, fixed_points))

A clean report means "no counterexample found", not a proof.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from modfix.errors import (
    AlignmentError, EvaluationError, InvalidEllError, ParameterError,
)
from modfix.expr import evaluate, parse_expr, to_text
from modfix.modular import VIOLATION_SLACK, eval_modular, rho_distance
from modfix.space import DomainBox, convex_combine, fnvec, frozen_list, sample_domain

__all__ = [
    "Affine", "Expression", "Compose", "apply_mapping", "fixed_point_of_affine",
    "ClassReport", "check_firm_nonexpansive", "check_rho_nonexpansive",
    "check_condition_I", "firm_implication_exceptions", "fma",
]


if hasattr(math, "fma"):
    fma = math.fma
else:
    def fma(a, x, b):
        """Correctly rounded ``a*x + b`` (one rounding) for finite inputs.

        Exact integer arithmetic; CPython's int/int true division rounds
        correctly, which gives the single final rounding.
        """
        na, da = a.as_integer_ratio()
        nx, dx = x.as_integer_ratio()
        nb, db = b.as_integer_ratio()
        try:
            return (na * nx * db + nb * da * dx) / (da * dx * db)
        except OverflowError:
            return math.copysign(math.inf, na * nx * db + nb * da * dx)


@dataclass(frozen=True)
class Affine:
    """``f -> a f + b`` pointwise."""

    a: float
    b: float

    def describe(self):
        return f"affine({self.a!r}, {self.b!r})"


@dataclass(frozen=True)
class Expression:
    """A parsed expression in ``f`` applied pointwise."""

    text: str
    ast: object = None

    def __post_init__(self):
        if self.ast is None:
            object.__setattr__(self, "ast", parse_expr(self.text, variable="f"))

    def describe(self):
        return to_text(self.ast)


@dataclass(frozen=True)
class Compose:
    """Apply ``parts`` left to right: ``Compose((S, T))`` is ``T o S``."""

    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise ParameterError("composition needs at least one mapping")
        object.__setattr__(self, "parts", tuple(self.parts))

    def describe(self):
        return " then ".join(p.describe() for p in self.parts)


def apply_mapping(T, f):
    """Apply ``T`` to the function vector ``f`` pointwise."""
    f = fnvec(f)
    if isinstance(T, Affine):
        a, b = float(T.a), float(T.b)
        out = [fma(a, x, b) for x in f.tolist()]
        for i, v in enumerate(out):
            if not math.isfinite(v):
                raise EvaluationError("non-finite result", i)
        return frozen_list(out)
    if isinstance(T, Expression):
        return fnvec(evaluate(T.ast, f))
    if isinstance(T, Compose):
        for part in T.parts:
            f = apply_mapping(part, f)
        return f
    raise TypeError(f"not a mapping: {T!r}")


def fixed_point_of_affine(T, n=1):
    """The unique fixed point ``b / (1 - a)`` of an affine map with ``a != 1``."""
    if not isinstance(T, Affine):
        raise ParameterError("closed-form fixed point only for affine maps")
    if T.a == 1:
        raise ParameterError("affine map with slope 1 has no unique fixed point")
    return fnvec(np.full(n, T.b / (1.0 - T.a)))


@dataclass(frozen=True)
class ClassReport:
    class_name: str
    lam: Optional[float]
    pairs_tested: int
    violations: int
    worst_margin: float

    @property
    def passed(self):
        return self.violations == 0


def _sample_pairs(box, pairs, seed):
    # first pair is the diagonal, the next two are the opposite corners
    s_f, s_g = np.random.SeedSequence(seed).spawn(2)
    fs = sample_domain(box, pairs, s_f)
    gs = sample_domain(box, pairs, s_g)
    out = [(fs[0], fs[0])]
    if pairs > 1:
        out.append((box.upper, box.lower))
    if pairs > 2:
        out.append((box.lower, box.upper))
    out.extend(zip(fs[3:], gs[3:]))
    return out


def _validate(grid, box, count):
    if count < 1:
        raise ParameterError("sample count must be >= 1")
    if not isinstance(box, DomainBox):
        raise ParameterError("box must be a DomainBox")
    if len(box) != len(grid):
        raise AlignmentError("box does not match the grid")


def _check_lambda(lam):
    if not 0.0 < lam < 1.0:
        raise ParameterError(f"lambda must lie in (0, 1), got {lam}")


def _report(name, lam, margins):
    margins = np.asarray(margins, dtype=float)
    return ClassReport(name, lam, int(margins.size),
                       int(np.sum(margins < -VIOLATION_SLACK)), float(margins.min()))


def _firm_terms(rho, grid, T, lam, f, g):
    d = f - g
    td = apply_mapping(T, f) - apply_mapping(T, g)
    lhs = eval_modular(rho, grid, td)
    firm_rhs = eval_modular(rho, grid, convex_combine(d, td, lam))
    return lhs, firm_rhs, eval_modular(rho, grid, d)


def check_firm_nonexpansive(rho, grid, T, lam, box, pairs, seed):
    _check_lambda(lam)
    _validate(grid, box, pairs)
    margins = []
    for f, g in _sample_pairs(box, pairs, seed):
        lhs, rhs, _ = _firm_terms(rho, grid, T, lam, f, g)
        margins.append(rhs - lhs)
    return _report("firm", lam, margins)


def check_rho_nonexpansive(rho, grid, T, box, pairs, seed):
    _validate(grid, box, pairs)
    margins = []
    for f, g in _sample_pairs(box, pairs, seed):
        lhs = eval_modular(rho, grid, apply_mapping(T, f) - apply_mapping(T, g))
        margins.append(eval_modular(rho, grid, f - g) - lhs)
    return _report("nonexpansive", None, margins)


def firm_implication_exceptions(rho, grid, T, lam, box, pairs, seed):
    """Count sampled pairs that satisfy the firm inequality but not the nonexpansive one.

    For a convex modular the count should always be zero.
    """
    _check_lambda(lam)
    _validate(grid, box, pairs)
    exceptions = 0
    for f, g in _sample_pairs(box, pairs, seed):
        lhs, firm_rhs, ne_rhs = _firm_terms(rho, grid, T, lam, f, g)
        if lhs <= firm_rhs + VIOLATION_SLACK and lhs > ne_rhs + VIOLATION_SLACK:
            exceptions += 1
    return exceptions


def _as_ell(ell):
    if isinstance(ell, str):
        return parse_expr(ell, variable="r")
    return ell


def _check_ell_monotone(ell):
    rs = np.concatenate([[0.0], np.logspace(-8, 4, 400)])
    vals = evaluate(ell, rs)
    if np.any(np.diff(vals) < -VIOLATION_SLACK):
        raise InvalidEllError("ell must be nondecreasing on [0, inf)")


def check_condition_I(rho, grid, T, fixed_points, ell, box, samples, seed,
                      check_ell_monotone=False):
    """Sample ``rho(f - Tf) >= ell(dist_rho(f, fixed_points))`` over ``box``.

    ``ell`` is an expression in ``r`` (text or parsed) and must vanish at 0.
    With ``check_ell_monotone`` it is also probed for monotonicity on
    ``[0, 1e4]``.
    """
    fixed_points = [fnvec(w, grid) for w in fixed_points]
    if not fixed_points:
        raise ParameterError("condition (I) needs at least one fixed point")
    _validate(grid, box, samples)
    ell = _as_ell(ell)
    if abs(evaluate(ell, 0.0)) > VIOLATION_SLACK:
        raise InvalidEllError("ell(0) must be 0")
    if check_ell_monotone:
        _check_ell_monotone(ell)
    margins = []
    for f in sample_domain(box, samples, seed):
        lhs = eval_modular(rho, grid, f - apply_mapping(T, f))
        rhs = evaluate(ell, rho_distance(rho, grid, f, fixed_points))
        margins.append(lhs - rhs)
    return _report("condition_I", None, margins)
