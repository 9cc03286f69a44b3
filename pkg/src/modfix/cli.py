"""Command-line experiment runner.

Subcommands: ``run``, ``compare``, ``check``, ``paper-table``, ``norm``.

Exit codes:
    0  success (tolerance met / no violations)
    1  error (bad config, evaluation failure)
    2  ``run``/``paper-table`` stopped at max_iter
    3  ``check`` found violations
"""

import argparse
import copy
import csv
import io
import json
import os
import sys

from modfix.analysis import compare_schemes
from modfix.config import WORKED_EXAMPLE, parse_config
from modfix.errors import ConfigError, EvaluationError, ModfixError
from modfix.iterate import Scheme, run
from modfix.mappings import (
    check_condition_I, check_firm_nonexpansive, check_rho_nonexpansive,
)
from modfix.modular import (
    check_convexity, check_monotone, delta2_ratio_probe, eval_modular, luxemburg_norm,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITER = 2
EXIT_VIOLATIONS = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which collides with EXIT_MAX_ITER
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _table_cell(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def render(header, rows, fmt, color=False):
    """Render rows as CSV (shortest round-trip floats) or an aligned text table."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()
    cells = [[_table_cell(v) for v in row] for row in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]
    head = "  ".join(h.rjust(w) for h, w in zip(header, widths))
    if color:
        head = f"\033[1m{head}\033[0m"
    lines = [head, "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _emit(header, rows, fmt, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(render(header, rows, fmt))
    else:
        color = fmt == "table" and sys.stdout.isatty() and "NO_COLOR" not in os.environ
        sys.stdout.write(render(header, rows, fmt, color=color))


def trace_rows(trace, grid):
    """Header and rows for a trace; the scalar case gets the n, f_n, Tf_n, g_n, f_next layout."""
    if grid.is_scalar and not trace.streaming:
        header = ["n", "f_n", "Tf_n", "g_n", "f_next"]
        rows = [[r.n, float(r.f[0]), float(r.Tf[0]),
                 None if r.g is None else float(r.g[0]), float(r.f_next[0])]
                for r in trace.records]
        return header, rows
    header = ["n", "alpha_n", "rho_self_residual", "rho_to_w"]
    if not trace.streaming:
        header += [f"f_next[{i}]" for i in range(len(grid))]
    rows = []
    for r in trace.records:
        row = [r.n, r.alpha, r.rho_self_residual, r.rho_to_w]
        if not trace.streaming:
            row += [float(v) for v in r.f_next]
        rows.append(row)
    return header, rows


def _warn_undeclared(cfg):
    if cfg.scheme.kind != "khan":
        return
    missing = [name for name, flag in (("convex", cfg.rho.declared_convex),
                                       ("delta2", cfg.rho.declared_delta2),
                                       ("uuc1", cfg.rho.declared_uuc1)) if not flag]
    if missing:
        print(f"warning: modular {cfg.rho.describe()} is not declared "
              f"{', '.join(missing)}; convergence is not guaranteed", file=sys.stderr)


def _summary(trace):
    print(f"{trace.scheme.name}: {trace.stop_reason} after {trace.iterations} iterations",
          file=sys.stderr)


def _load(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("", f"cannot load {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("", "config must be a JSON object")
    data = copy.deepcopy(data)
    if getattr(args, "alpha", None) is not None:
        data["alpha"] = args.alpha
    if getattr(args, "beta", None) is not None:
        data["beta"] = args.beta
    if getattr(args, "scheme", None) is not None:
        data["scheme"] = args.scheme
    if getattr(args, "tol", None) is not None or getattr(args, "max_iter", None) is not None:
        stop = dict(data.get("stop", WORKED_EXAMPLE["stop"]))
        if args.tol is not None:
            stop["tol"] = args.tol
        if args.max_iter is not None:
            stop["max_iter"] = args.max_iter
        data["stop"] = stop
    if args.seed is not None:
        data["seed"] = args.seed
    out = dict(data.get("output") or WORKED_EXAMPLE["output"])
    if args.format is not None:
        out["format"] = args.format
    if args.output is not None:
        out["path"] = args.output
    data["output"] = out
    if getattr(args, "alpha_sweep", None) is not None:
        data["alpha_sweep"] = args.alpha_sweep
    check = {}
    for attr, key in (("check_class", "class"), ("lam", "lambda"), ("ell", "ell"),
                      ("samples", "samples")):
        if getattr(args, attr, None) is not None:
            check[key] = getattr(args, attr)
    if check:
        data["check"] = {**data.get("check", {}), **check}
    if getattr(args, "f", None) is not None:
        data["f"] = args.f
    return parse_config(data)


def cmd_run(cfg):
    _warn_undeclared(cfg)
    try:
        trace = run(cfg.scheme, cfg.mapping, cfg.start, cfg.steps, cfg.stop, cfg.rho, cfg.grid)
    except EvaluationError as exc:
        if exc.trace is not None and exc.trace.records:
            header, rows = trace_rows(exc.trace, cfg.grid)
            _emit(header, rows, cfg.output_format, cfg.output_path)
        raise
    header, rows = trace_rows(trace, cfg.grid)
    _emit(header, rows, cfg.output_format, cfg.output_path)
    _summary(trace)
    return EXIT_OK if trace.converged else EXIT_MAX_ITER


def _compare_specs(cfg):
    base = cfg.schemes or [(cfg.scheme, cfg.steps)]
    if not cfg.alpha_sweep:
        if cfg.schemes:
            return base, False
        beta = cfg.scheme.beta or cfg.steps
        return [(Scheme.khan(), cfg.steps), (Scheme.picard(), None),
                (Scheme.mann(), cfg.steps), (Scheme("ishikawa", beta), cfg.steps)], False
    specs = []
    for steps in cfg.alpha_sweep:
        for scheme, _ in base:
            specs.append((scheme, None if scheme.kind == "picard" else steps))
    return specs, True


def cmd_compare(cfg):
    specs, sweep = _compare_specs(cfg)
    rows = compare_schemes(specs, cfg.mapping, cfg.start, cfg.stop, cfg.rho, cfg.grid,
                           label_alpha=sweep or len({s.kind for s, _ in specs}) < len(specs))
    header = ["scheme", "iterations", "contraction_factor", "final_residual", "stop_reason"]
    table = [[r.label, r.iterations, r.contraction_factor, r.final_residual, r.stop_reason]
             for r in rows]
    _emit(header, table, cfg.output_format, cfg.output_path)
    for r in rows:
        if r.error:
            print(f"error in {r.label}: {r.error}", file=sys.stderr)
    return EXIT_ERROR if any(r.error for r in rows) else EXIT_OK


def cmd_check(cfg):
    chk = cfg.check
    cls = chk["class"]
    n = chk.get("samples", 1000)
    args = (cfg.rho, cfg.grid)
    if cls == "firm":
        rep = check_firm_nonexpansive(*args, cfg.mapping, float(chk["lambda"]), cfg.box, n, cfg.seed)
    elif cls == "nonexpansive":
        rep = check_rho_nonexpansive(*args, cfg.mapping, cfg.box, n, cfg.seed)
    elif cls == "condition_I":
        fps = chk["fixed_points"] or ([cfg.stop.w] if cfg.stop.w is not None else [])
        if not fps:
            raise ConfigError("check.fixed_points", "condition_I needs fixed points")
        rep = check_condition_I(*args, cfg.mapping, fps, chk.get("ell", "r/6"), cfg.box, n,
                                cfg.seed, check_ell_monotone=bool(chk.get("check_ell_monotone")))
    elif cls == "convexity":
        rep = check_convexity(*args, n, cfg.seed, cfg.box)
    elif cls == "monotone":
        rep = check_monotone(*args, n, cfg.seed, cfg.box)
    else:
        ratio = delta2_ratio_probe(*args, n, cfg.seed, cfg.box)
        _emit(["property", "samples_tested", "max_ratio"], [["delta2", n, ratio]],
              cfg.output_format, cfg.output_path)
        return EXIT_OK
    if hasattr(rep, "class_name"):
        header = ["class", "lambda", "pairs_tested", "violations", "worst_margin"]
        row = [rep.class_name, rep.lam, rep.pairs_tested, rep.violations, rep.worst_margin]
    else:
        header = ["property", "samples_tested", "violations", "worst_margin"]
        row = [rep.property_name, rep.samples_tested, rep.violations, rep.worst_margin]
    _emit(header, [row], cfg.output_format, cfg.output_path)
    return EXIT_OK if rep.violations == 0 else EXIT_VIOLATIONS


def cmd_paper_table(cfg):
    return cmd_run(cfg)


def cmd_norm(cfg):
    f = cfg.f if cfg.f is not None else cfg.start
    value = eval_modular(cfg.rho, cfg.grid, f)
    norm = luxemburg_norm(cfg.rho, cfg.grid, f)
    if cfg.output_format == "csv":
        _emit(["rho", "luxemburg_norm"], [[value, norm]], "csv", cfg.output_path)
    else:
        text = f"rho(f) = {value!r}\n||f||_rho = {norm!r}\n"
        if cfg.output_path:
            with open(cfg.output_path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    return vals


def _scalar_or_list(text):
    vals = _floats(text)
    return vals[0] if len(vals) == 1 else vals


def build_parser():
    parser = _Parser(prog="modfix", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--format", choices=("table", "csv"))
        p.add_argument("--output", help="write to this file instead of stdout")
        p.add_argument("--seed", type=int)

    def iteration(p):
        p.add_argument("--alpha", type=_scalar_or_list, help="step size, or comma-separated table")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int)

    p = sub.add_parser("run", help="run one scheme and write its trace")
    common(p)
    iteration(p)
    p.add_argument("--beta", type=_scalar_or_list)
    p.add_argument("--scheme", choices=Scheme.KINDS)

    p = sub.add_parser("compare", help="compare schemes or sweep alpha")
    common(p)
    iteration(p)
    p.add_argument("--beta", type=_scalar_or_list)
    p.add_argument("--scheme", choices=Scheme.KINDS)
    p.add_argument("--alpha-sweep", type=_floats, help="comma-separated alpha values")

    p = sub.add_parser("check", help="sampled check of a mapping class or modular axiom")
    common(p)
    p.add_argument("--class", dest="check_class",
                   choices=("firm", "nonexpansive", "condition_I", "convexity", "monotone", "delta2"))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--ell", help="comparison function in r, e.g. 'r/6'")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("paper-table", help="reproduce the worked example's iteration table")
    common(p, config=False)
    iteration(p)

    p = sub.add_parser("norm", help="print rho(f) and the Luxemburg norm")
    common(p)
    p.add_argument("--f", type=_scalar_or_list, help="function values, comma-separated")
    return parser


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "check": cmd_check,
    "paper-table": cmd_paper_table,
    "norm": cmd_norm,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "paper-table":
        args.config = None
    try:
        cfg = _load(args)
        return COMMANDS[args.command](cfg)
    except ModfixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
