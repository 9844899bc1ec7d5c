"""Metric specifications, expression entries, and derivative jets."""

from .builtins import FIXTURES, builtin_metric, example22, fixture, flat, hopf, poincare_polydisk
from .expr import (
    Abs2,
    Add,
    Conj,
    ConjVar,
    Const,
    Div,
    Expr,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    eval_expr,
    holomorphic_derivative,
    is_holomorphic,
    max_var_index,
    parse_expr,
    substitute,
    to_text,
)
from .jets import DEFAULT_SCHEME, ComplexJet2, JetScheme, complex_jet2, field_first, real_jet2
from .model import (
    ExactJets,
    MetricJet,
    MetricSpec,
    Region,
    load_metric,
    metric_jet,
    metric_value,
    validate_metric,
)

__all__ = [
    "FIXTURES",
    "builtin_metric",
    "example22",
    "fixture",
    "flat",
    "hopf",
    "poincare_polydisk",
    "Abs2",
    "Add",
    "Conj",
    "ConjVar",
    "Const",
    "Div",
    "Expr",
    "Mul",
    "Neg",
    "Pow",
    "Sub",
    "Var",
    "eval_expr",
    "holomorphic_derivative",
    "is_holomorphic",
    "max_var_index",
    "parse_expr",
    "substitute",
    "to_text",
    "DEFAULT_SCHEME",
    "ComplexJet2",
    "JetScheme",
    "complex_jet2",
    "field_first",
    "real_jet2",
    "ExactJets",
    "MetricJet",
    "MetricSpec",
    "Region",
    "load_metric",
    "metric_jet",
    "metric_value",
    "validate_metric",
]
