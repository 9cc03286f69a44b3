"""Modular functionals on a finite grid and sampled checks of their axioms.

A modular is evaluated as ``rho(f) = sum_i w_i * phi(|f(x_i)|)`` where the
weights come from the grid and ``phi`` depends on the kind:

* ``absolute``: ``phi(t) = t`` (on the scalar grid this is ``|f|``)
* ``power``:    ``phi(t) = t**p`` with ``p >= 1``
* ``orlicz``:   a user expression in the variable ``t``
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from modfix.errors import AlignmentError, DomainError, ParameterError, UnsupportedError
from modfix.expr import evaluate, parse_expr
from modfix.space import DomainBox, sample_domain

__all__ = [
    "ModularFn", "ModularReport", "eval_modular", "luxemburg_norm", "rho_distance",
    "check_convexity", "check_monotone", "delta2_ratio_probe", "VIOLATION_SLACK",
]

VIOLATION_SLACK = 1e-12
LUXEMBURG_TOL = 1e-12
LUXEMBURG_MAX_BISECT = 200
LUXEMBURG_MAX_BRACKET = 64


@dataclass(frozen=True)
class ModularFn:
    """A modular functional plus the analytic properties it is declared to have.

    Only convexity, monotonicity and the doubling ratio can be probed by
    sampling; ``declared_uuc1`` is taken on trust.
    """

    kind: str
    p: Optional[float] = None
    phi_text: Optional[str] = None
    declared_convex: bool = True
    declared_delta2: bool = True
    declared_uuc1: bool = True
    phi: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind == "absolute":
            return
        if self.kind == "power":
            if self.p is None or not math.isfinite(self.p) or self.p < 1:
                raise ParameterError(f"power modular needs p >= 1, got {self.p}")
            return
        if self.kind == "orlicz":
            if self.phi_text is None:
                raise ParameterError("orlicz modular needs a phi expression")
            phi = parse_expr(self.phi_text, variable="t")
            _validate_phi(phi)
            object.__setattr__(self, "phi", phi)
            return
        raise ParameterError(f"unknown modular kind {self.kind!r}")

    @classmethod
    def absolute(cls):
        return cls("absolute")

    @classmethod
    def power(cls, p):
        return cls("power", p=float(p))

    @classmethod
    def orlicz(cls, phi_text, convex=False, delta2=False, uuc1=False):
        return cls("orlicz", phi_text=phi_text, declared_convex=convex,
                   declared_delta2=delta2, declared_uuc1=uuc1)

    def describe(self):
        if self.kind == "power":
            return f"power(p={self.p:g})"
        if self.kind == "orlicz":
            return f"orlicz({self.phi_text})"
        return "absolute"


def _validate_phi(phi):
    if abs(evaluate(phi, 0.0)) > VIOLATION_SLACK:
        raise ParameterError("orlicz phi must satisfy phi(0) = 0")
    ts = np.concatenate([[0.0], np.logspace(-6, 6, 241)])
    vals = evaluate(phi, ts)
    if np.any(vals < 0) or np.any(np.diff(vals) < -VIOLATION_SLACK * np.maximum(1.0, vals[1:])):
        raise ParameterError("orlicz phi must be nonnegative and nondecreasing on [0, inf)")


def _phi(rho, t):
    if rho.kind == "absolute":
        return t
    if rho.kind == "power":
        return t ** rho.p
    return evaluate(rho.phi, t)


def _raw(rho, weights, f):
    return float(np.dot(weights, _phi(rho, np.abs(f))))


def _grid_vec(grid, f):
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        f = f.reshape(1)
    if f.shape != (len(grid),):
        raise AlignmentError(f"vector of shape {f.shape} does not match grid of {len(grid)} points")
    if not np.isfinite(f).all():
        raise DomainError("non-finite value passed to modular")
    return f


def eval_modular(rho, grid, f):
    """Evaluate ``rho(f)``; always finite and nonnegative."""
    if rho.kind == "absolute" and grid.is_scalar and isinstance(f, np.ndarray) and f.shape == (1,):
        x = float(f[0])
        if not math.isfinite(x):
            raise DomainError("non-finite value passed to modular")
        return float(grid.weights[0]) * abs(x)
    f = _grid_vec(grid, f)
    if rho.kind == "absolute":
        value = _raw(rho, grid.weights, f)
    else:
        with np.errstate(over="ignore"):
            value = _raw(rho, grid.weights, f)
    if not math.isfinite(value):
        raise DomainError("modular value overflowed")
    return value


def luxemburg_norm(rho, grid, f, tol=LUXEMBURG_TOL):
    """Luxemburg norm ``inf{a > 0 : rho(f / a) <= 1}`` by bracketing and bisection.

    The bracket starts at ``a = 1`` and doubles or halves (at most 64 times)
    until it straddles the level set; bisection then runs until the bracket is
    narrower than ``tol * max(1, a)`` or 200 steps have been taken.
    """
    if not rho.declared_convex:
        raise UnsupportedError("Luxemburg norm requires a convex modular")
    if not (tol > 0 and math.isfinite(tol)):
        raise ParameterError("tol must be a positive finite number")
    f = _grid_vec(grid, f)
    if not np.any(f):
        return 0.0
    w = grid.weights

    def level(a):
        with np.errstate(over="ignore", invalid="ignore"):
            v = _raw(rho, w, f / a)
        return v if math.isfinite(v) else math.inf

    a = 1.0
    if level(a) <= 1.0:
        hi = a
        for _ in range(LUXEMBURG_MAX_BRACKET):
            a = hi / 2.0
            if level(a) > 1.0:
                break
            hi = a
        else:
            raise ParameterError("could not bracket the Luxemburg norm from above")
        lo = a
    else:
        lo = a
        for _ in range(LUXEMBURG_MAX_BRACKET):
            a = lo * 2.0
            if level(a) <= 1.0:
                break
            lo = a
        else:
            raise ParameterError("could not bracket the Luxemburg norm from below")
        hi = a

    for _ in range(LUXEMBURG_MAX_BISECT):
        if hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if level(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def rho_distance(rho, grid, f, targets):
    """``min_h rho(f - h)`` over a finite, nonempty candidate set."""
    targets = list(targets)
    if not targets:
        raise ParameterError("rho_distance needs at least one target")
    f = _grid_vec(grid, f)
    return min(eval_modular(rho, grid, f - _grid_vec(grid, h)) for h in targets)


@dataclass(frozen=True)
class ModularReport:
    property_name: str
    samples_tested: int
    violations: int
    worst_margin: float

    @property
    def passed(self):
        return self.violations == 0


def _check_args(grid, samples, box):
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    if not isinstance(box, DomainBox):
        raise ParameterError("bounds must be a DomainBox")
    if len(box) != len(grid):
        raise AlignmentError("sampling box does not match the grid")


def _report(name, margins):
    margins = np.asarray(margins, dtype=float)
    return ModularReport(
        property_name=name,
        samples_tested=int(margins.size),
        violations=int(np.sum(margins < -VIOLATION_SLACK)),
        worst_margin=float(margins.min()),
    )


def check_convexity(rho, grid, samples, seed, bounds):
    """Sample ``rho(a f + (1-a) g) <= a rho(f) + (1-a) rho(g)`` on seeded triples."""
    _check_args(grid, samples, bounds)
    s_f, s_g, s_a = np.random.SeedSequence(seed).spawn(3)
    fs = sample_domain(bounds, samples, s_f)
    gs = sample_domain(bounds, samples, s_g)
    # avoid the exact endpoints: a in the open interval (0, 1)
    alphas = np.random.default_rng(s_a).uniform(1e-6, 1.0 - 1e-6, samples)
    margins = []
    for f, g, a in zip(fs, gs, alphas):
        lhs = eval_modular(rho, grid, a * f + (1.0 - a) * g)
        rhs = a * eval_modular(rho, grid, f) + (1.0 - a) * eval_modular(rho, grid, g)
        margins.append(rhs - lhs)
    return _report("convexity", margins)


def check_monotone(rho, grid, samples, seed, bounds):
    """Sample ``|f| <= |g| => rho(f) <= rho(g)`` with ``f = u g``, ``u`` in ``[0, 1]``."""
    _check_args(grid, samples, bounds)
    s_g, s_u = np.random.SeedSequence(seed).spawn(2)
    gs = sample_domain(bounds, samples, s_g)
    us = np.random.default_rng(s_u).random((samples, len(grid)))
    us[0] = 0.0
    margins = []
    for g, u in zip(gs, us):
        f = g * u
        margins.append(eval_modular(rho, grid, g) - eval_modular(rho, grid, f))
    return _report("monotone", margins)


def delta2_ratio_probe(rho, grid, samples, seed, bounds):
    """Largest observed ``rho(2f) / rho(f)`` over sampled nonzero ``f``.

    A bounded ratio is evidence for (not proof of) the doubling condition.
    """
    _check_args(grid, samples, bounds)
    worst = -math.inf
    for f in sample_domain(bounds, samples, seed):
        base = eval_modular(rho, grid, f)
        if base > 1e-300:
            worst = max(worst, eval_modular(rho, grid, 2.0 * f) / base)
    if worst == -math.inf:
        raise ParameterError("no sample with rho(f) > 0; widen the bounds")
    return worst
