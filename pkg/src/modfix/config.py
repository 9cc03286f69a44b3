"""JSON experiment configuration.

Schema (every key optional; defaults reproduce the worked example)::

    {
      "space":   "scalar" | {"points": [...], "weights": [...]},
      "modular": {"kind": "absolute"}
               | {"kind": "power", "p": 2}
               | {"kind": "orlicz", "phi": "t*t", "convex": true,
                  "delta2": true, "uuc1": false},
      "domain":  {"lower": 1, "upper": 8},          # numbers or per-point lists
      "mapping": {"affine": [0.6667, 0.3333]} | {"expr": "(2*f+1)/3"}
               | {"compose": [<mapping>, ...]},
      "start":   4,                                  # number or per-point list
      "scheme":  "khan" | "picard" | "mann" | "ishikawa",
      "alpha":   0.5 | [0.9, 0.5, ...],              # constant or table
      "alpha_bounds": [0.1, 0.9],                    # optional, for tables
      "beta":    0.5 | [...],                        # ishikawa only
      "schemes": [{"scheme": "khan", "alpha": 0.5}, ...],   # compare
      "alpha_sweep": [0.25, 0.5, 0.75],                     # compare
      "stop":    {"kind": "residual_to_fixed_point", "tol": 1e-5,
                  "max_iter": 10000, "w": 1},
      "check":   {"class": "firm", "lambda": 0.3333, "ell": "r/6",
                  "fixed_points": [1], "samples": 1000,
                  "check_ell_monotone": false},
      "f":       [2, 2],                             # norm
      "output":  {"format": "table" | "csv", "path": null},
      "seed":    0
    }

Numeric constraints are re-validated through the library constructors and
reported with the dotted path of the offending field.
"""

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from modfix.errors import ConfigError, ModfixError
from modfix.iterate import Scheme, StepSequence, StopRule
from modfix.mappings import Affine, Compose, Expression
from modfix.modular import ModularFn
from modfix.space import DomainBox, MeasureGrid, fnvec

__all__ = ["ExperimentConfig", "WORKED_EXAMPLE", "load_config", "parse_config"]

WORKED_EXAMPLE = {
    "space": "scalar",
    "modular": {"kind": "absolute"},
    "domain": {"lower": 1, "upper": 8},
    "mapping": {"affine": [2 / 3, 1 / 3]},
    "start": 4,
    "scheme": "khan",
    "alpha": 0.5,
    "beta": 0.5,
    "stop": {"kind": "residual_to_fixed_point", "tol": 1e-5, "max_iter": 10000, "w": 1},
    "check": {"class": "firm", "lambda": 1 / 3, "ell": "r/6", "fixed_points": [1],
              "samples": 1000},
    "output": {"format": "table", "path": None},
    "seed": 0,
}

CHECK_CLASSES = ("firm", "nonexpansive", "condition_I", "convexity", "monotone", "delta2")
_TOP_KEYS = set(WORKED_EXAMPLE) | {"schemes", "alpha_sweep", "alpha_bounds", "f"}


@dataclass
class ExperimentConfig:
    grid: MeasureGrid
    rho: ModularFn
    box: DomainBox
    mapping: object
    start: np.ndarray
    scheme: Scheme
    steps: Optional[StepSequence]
    stop: StopRule
    schemes: list = field(default_factory=list)
    alpha_sweep: list = field(default_factory=list)
    check: dict = field(default_factory=dict)
    f: Optional[np.ndarray] = None
    output_format: str = "table"
    output_path: Optional[str] = None
    seed: int = 0
    raw: dict = field(default_factory=dict)


class _Ctx:
    """Wrap library errors with the config path being parsed."""

    def __init__(self, path):
        self.path = path

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if exc is None or isinstance(exc, ConfigError):
            return False
        if isinstance(exc, (ModfixError, ValueError, TypeError, KeyError)):
            raise ConfigError(self.path, str(exc)) from exc
        return False


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _vector(value, n, path):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return fnvec(np.full(n, float(value)))
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a number or a list, got {value!r}")
    vals = [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if len(vals) != n:
        raise ConfigError(path, f"expected {n} values to match the grid, got {len(vals)}")
    with _Ctx(path):
        return fnvec(vals)


def _grid(spec):
    if spec == "scalar" or spec is None:
        return MeasureGrid.scalar()
    if not isinstance(spec, dict):
        raise ConfigError("space", "expected \"scalar\" or an object with points/weights")
    weights = spec.get("weights")
    if weights is None:
        raise ConfigError("space.weights", "missing")
    points = spec.get("points", list(range(len(weights))))
    with _Ctx("space"):
        return MeasureGrid(points, weights)


def _modular(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("modular.kind", "missing")
    kind = spec["kind"]
    with _Ctx("modular"):
        if kind == "absolute":
            rho = ModularFn.absolute()
        elif kind == "power":
            if "p" not in spec:
                raise ConfigError("modular.p", "missing")
            rho = ModularFn.power(_number(spec["p"], "modular.p"))
        elif kind == "orlicz":
            if "phi" not in spec:
                raise ConfigError("modular.phi", "missing")
            rho = ModularFn.orlicz(spec["phi"])
        else:
            raise ConfigError("modular.kind", f"unknown kind {kind!r}")
    overrides = {}
    for key, attr in (("convex", "declared_convex"), ("delta2", "declared_delta2"),
                      ("uuc1", "declared_uuc1")):
        if key in spec:
            if not isinstance(spec[key], bool):
                raise ConfigError(f"modular.{key}", "expected true or false")
            overrides[attr] = spec[key]
    if overrides:
        rho = replace(rho, **overrides)
    return rho


def _mapping(spec, path="mapping"):
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(path, "expected exactly one of affine / expr / compose")
    (kind, value), = spec.items()
    if kind == "affine":
        if not isinstance(value, list) or len(value) != 2:
            raise ConfigError(f"{path}.affine", "expected [a, b]")
        return Affine(_number(value[0], f"{path}.affine[0]"), _number(value[1], f"{path}.affine[1]"))
    if kind == "expr":
        if not isinstance(value, str):
            raise ConfigError(f"{path}.expr", "expected a string")
        with _Ctx(f"{path}.expr"):
            return Expression(value)
    if kind == "compose":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path}.compose", "expected a nonempty list")
        return Compose(tuple(_mapping(v, f"{path}.compose[{i}]") for i, v in enumerate(value)))
    raise ConfigError(path, f"unknown mapping kind {kind!r}")


def _steps(value, path, bounds=None):
    if value is None:
        return None
    lower, upper = (None, None) if bounds is None else bounds
    with _Ctx(path):
        if isinstance(value, list):
            return StepSequence.table([_number(v, f"{path}[{i}]") for i, v in enumerate(value)],
                                      lower, upper)
        return StepSequence((_number(value, path),), lower, upper)


def _scheme(name, beta, path):
    if name not in Scheme.KINDS:
        raise ConfigError(path, f"unknown scheme {name!r}")
    if name == "ishikawa":
        if beta is None:
            raise ConfigError(path, "ishikawa requires beta")
        return Scheme("ishikawa", beta)
    return Scheme(name)


def _stop(spec, n):
    if not isinstance(spec, dict):
        raise ConfigError("stop", "expected an object")
    kind = spec.get("kind", "residual_to_fixed_point")
    tol = _number(spec.get("tol", 1e-5), "stop.tol")
    max_iter = spec.get("max_iter", 10000)
    if isinstance(max_iter, bool) or not isinstance(max_iter, int):
        raise ConfigError("stop.max_iter", "expected an integer")
    w = spec.get("w")
    w = _vector(w, n, "stop.w") if w is not None else None
    with _Ctx("stop"):
        return StopRule(kind, tol, max_iter, w)


def parse_config(data):
    """Validate a config dictionary and build the library objects."""
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a JSON object")
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    merged = {**WORKED_EXAMPLE, **data}
    grid = _grid(merged["space"])
    n = len(grid)
    rho = _modular(merged["modular"])

    dom = merged["domain"]
    if not isinstance(dom, dict):
        raise ConfigError("domain", "expected an object with lower/upper")
    lower = _vector(dom.get("lower"), n, "domain.lower")
    upper = _vector(dom.get("upper"), n, "domain.upper")
    with _Ctx("domain"):
        box = DomainBox(lower, upper)

    mapping = _mapping(merged["mapping"])
    start = _vector(merged["start"], n, "start")

    bounds = merged.get("alpha_bounds")
    if bounds is not None:
        if not isinstance(bounds, list) or len(bounds) != 2:
            raise ConfigError("alpha_bounds", "expected [lower, upper]")
        bounds = (_number(bounds[0], "alpha_bounds[0]"), _number(bounds[1], "alpha_bounds[1]"))
    steps = _steps(merged["alpha"], "alpha", bounds)
    beta = _steps(merged.get("beta"), "beta")
    scheme = _scheme(merged["scheme"], beta, "scheme")
    stop = _stop(merged["stop"], n)

    schemes = []
    for i, item in enumerate(merged.get("schemes") or []):
        path = f"schemes[{i}]"
        if not isinstance(item, dict) or "scheme" not in item:
            raise ConfigError(f"{path}.scheme", "missing")
        item_beta = _steps(item.get("beta", merged.get("beta")), f"{path}.beta")
        sch = _scheme(item["scheme"], item_beta, f"{path}.scheme")
        st = _steps(item.get("alpha", merged["alpha"]), f"{path}.alpha")
        schemes.append((sch, st))

    sweep = []
    for i, a in enumerate(merged.get("alpha_sweep") or []):
        sweep.append(_steps(a, f"alpha_sweep[{i}]"))

    check = dict(WORKED_EXAMPLE["check"])
    if "check" in data:
        if not isinstance(data["check"], dict):
            raise ConfigError("check", "expected an object")
        check.update(data["check"])
    if check.get("class") not in CHECK_CLASSES:
        raise ConfigError("check.class", f"expected one of {', '.join(CHECK_CLASSES)}")
    check["fixed_points"] = [_vector(v, n, f"check.fixed_points[{i}]")
                             for i, v in enumerate(check.get("fixed_points") or [])]
    samples = check.get("samples", 1000)
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 1:
        raise ConfigError("check.samples", "expected a positive integer")
    if check["class"] == "firm":
        lam = _number(check.get("lambda"), "check.lambda")
        if not 0 < lam < 1:
            raise ConfigError("check.lambda", "must lie in (0, 1)")

    f = merged.get("f")
    f = _vector(f, n, "f") if f is not None else None

    out = merged["output"] or {}
    fmt = out.get("format", "table")
    if fmt not in ("table", "csv"):
        raise ConfigError("output.format", "expected \"table\" or \"csv\"")
    seed = merged["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", "expected an integer")

    return ExperimentConfig(
        grid=grid, rho=rho, box=box, mapping=mapping, start=start, scheme=scheme,
        steps=steps, stop=stop, schemes=schemes, alpha_sweep=sweep, check=check, f=f,
        output_format=fmt, output_path=out.get("path"), seed=seed, raw=merged,
    )


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    return parse_config(data)
