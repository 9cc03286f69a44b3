"""Fixed-point iteration in modular function spaces, at desk scale."""

from modfix.analysis import (
    ComparisonRow, DiagnosticsReport, compare_schemes, diagnose, dist_series,
    fejer_check, residual_series,
)
from modfix.errors import (
    AlignmentError, ConfigError, DomainError, EvaluationError, InvalidEllError,
    ModfixError, ParameterError, ParseError, UnsupportedError,
)
from modfix.expr import evaluate, parse_expr, to_text
from modfix.iterate import (
    IterationTrace, Scheme, StepSequence, StopRule, contraction_factor, ishikawa_step,
    khan_step, mann_step, picard_step, run,
)
from modfix.mappings import (
    Affine, ClassReport, Compose, Expression, apply_mapping, check_condition_I,
    check_firm_nonexpansive, check_rho_nonexpansive, firm_implication_exceptions,
    fixed_point_of_affine,
)
from modfix.modular import (
    ModularFn, ModularReport, check_convexity, check_monotone, delta2_ratio_probe,
    eval_modular, luxemburg_norm, rho_distance,
)
from modfix.space import DomainBox, MeasureGrid, convex_combine, fnvec, sample_domain

__version__ = "0.1.0"

__all__ = [
    "ComparisonRow",
    "DiagnosticsReport",
    "compare_schemes",
    "diagnose",
    "dist_series",
    "fejer_check",
    "residual_series",
    "AlignmentError",
    "ConfigError",
    "DomainError",
    "EvaluationError",
    "InvalidEllError",
    "ModfixError",
    "ParameterError",
    "ParseError",
    "UnsupportedError",
    "evaluate",
    "parse_expr",
    "to_text",
    "IterationTrace",
    "Scheme",
    "StepSequence",
    "StopRule",
    "contraction_factor",
    "ishikawa_step",
    "khan_step",
    "mann_step",
    "picard_step",
    "run",
    "Affine",
    "ClassReport",
    "Compose",
    "Expression",
    "apply_mapping",
    "check_condition_I",
    "check_firm_nonexpansive",
    "check_rho_nonexpansive",
    "firm_implication_exceptions",
    "fixed_point_of_affine",
    "ModularFn",
    "ModularReport",
    "check_convexity",
    "check_monotone",
    "delta2_ratio_probe",
    "eval_modular",
    "luxemburg_norm",
    "rho_distance",
    "DomainBox",
    "MeasureGrid",
    "convex_combine",
    "fnvec",
    "sample_domain",
]
