"""Finite stand-ins for the measure space and for functions living on it.

A :class:`MeasureGrid` is a list of sample points with positive masses. A
function vector ("FnVec") is a read-only 1-D float array aligned to a grid;
:func:`fnvec` builds and validates one. The scalar space used throughout the
worked example is ``MeasureGrid.scalar()``, a single point of unit mass.
"""

from dataclasses import dataclass

import numpy as np

from modfix.errors import AlignmentError, DomainError, ParameterError

__all__ = ["MeasureGrid", "DomainBox", "fnvec", "convex_combine", "sample_domain"]


def _frozen(values):
    arr = np.array(values, dtype=float, ndmin=1)
    arr.flags.writeable = False
    return arr


def frozen_list(values):
    """Freeze a list of floats already known to be finite (internal fast path)."""
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


def fnvec(values, grid=None):
    """Return ``values`` as an immutable function vector.

    Scalars are promoted to length-1 vectors. When ``grid`` is given the
    length is checked against it.
    """
    if isinstance(values, np.ndarray) and not values.flags.writeable and values.ndim == 1 \
            and values.dtype == float and grid is None:
        # already a validated, frozen vector
        return values
    arr = _frozen(values)
    if arr.ndim != 1:
        raise AlignmentError(f"function vector must be 1-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DomainError("function vector has non-finite entries")
    if grid is not None and arr.shape[0] != len(grid):
        raise AlignmentError(
            f"function vector has {arr.shape[0]} values, grid has {len(grid)} points")
    return arr


@dataclass(frozen=True, eq=False)
class MeasureGrid:
    """Sample points with positive weights (the mu-masses)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = _frozen(self.points)
        weights = _frozen(self.weights)
        if weights.ndim != 1 or weights.shape[0] < 1:
            raise ParameterError("grid needs at least one weight")
        if points.shape != weights.shape:
            raise AlignmentError(
                f"{points.shape[0]} points but {weights.shape[0]} weights")
        if not (np.all(np.isfinite(weights)) and np.all(weights > 0)):
            raise ParameterError("grid weights must be finite and > 0")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def scalar(cls):
        return cls([0.0], [1.0])

    @classmethod
    def uniform(cls, n, lo=0.0, hi=1.0):
        """``n`` equally spaced points on ``[lo, hi]``, each of mass ``(hi-lo)/n``."""
        if n < 1:
            raise ParameterError("n must be >= 1")
        pts = np.linspace(lo, hi, n) if n > 1 else np.array([lo])
        return cls(pts, np.full(n, (hi - lo) / n if hi > lo else 1.0 / n))

    def __len__(self):
        return self.weights.shape[0]

    @property
    def is_scalar(self):
        return len(self) == 1

    def __eq__(self, other):
        if not isinstance(other, MeasureGrid):
            return NotImplemented
        return (np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes()))


@dataclass(frozen=True, eq=False)
class DomainBox:
    """Pointwise bounds ``lower <= f <= upper``: a convex, closed domain."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = fnvec(self.lower)
        upper = fnvec(self.upper)
        if lower.shape != upper.shape:
            raise AlignmentError("box bounds differ in length")
        if np.any(lower > upper):
            raise ParameterError("box requires lower <= upper pointwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, lo, hi, n=1):
        return cls(np.full(n, float(lo)), np.full(n, float(hi)))

    def __len__(self):
        return self.lower.shape[0]

    def contains(self, f):
        f = np.asarray(f, dtype=float)
        return bool(np.all(f >= self.lower) and np.all(f <= self.upper))


def convex_combine(f, g, t):
    """Pointwise ``(1 - t) f + t g`` for ``t`` in ``[0, 1]``.

    The endpoints are exact (``t=0`` gives ``f``, ``t=1`` gives ``g``) and
    so is ``f == g``; the result never leaves the interval spanned by ``f``
    and ``g`` at any point.
    """
    f = fnvec(f)
    g = fnvec(g)
    if f.shape != g.shape:
        raise AlignmentError(f"cannot combine vectors of length {f.shape[0]} and {g.shape[0]}")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"combination weight {t} outside [0, 1]")
    if t == 0.0:
        return f
    if t == 1.0:
        return g
    if f.shape[0] == 1:
        a, b = float(f[0]), float(g[0])
        v = a + t * (b - a)
        return frozen_list([min(max(v, min(a, b)), max(a, b))])
    out = f + t * (g - f)
    # rounding can push f + t(g-f) a hair past g
    lo = np.minimum(f, g)
    hi = np.maximum(f, g)
    np.maximum(out, lo, out=out)
    np.minimum(out, hi, out=out)
    out.flags.writeable = False
    return out


def sample_domain(box, count, seed):
    """Draw ``count`` points of ``box`` deterministically from ``seed``.

    The first two samples are the corners ``lower`` and ``upper``; the rest
    are uniform in the box.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    rng = np.random.default_rng(seed)
    span = box.upper - box.lower
    draws = rng.random((count, len(box)))
    out = []
    for i in range(count):
        if i == 0:
            v = box.lower
        elif i == 1:
            v = box.upper
        else:
            v = np.clip(box.lower + span * draws[i], box.lower, box.upper)
        out.append(fnvec(v))
    return out
