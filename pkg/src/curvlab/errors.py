"""Exception hierarchy shared across curvlab."""

__all__ = ["CurvlabError", "ConfigError", "NumericalError"]


class CurvlabError(Exception):
    """Base class for all curvlab errors."""


class ConfigError(CurvlabError):
    """Malformed input: bad expression text, invalid region, slot mismatch."""


class NumericalError(CurvlabError):
    """Computation cannot proceed: non positive-definite metric, NaN, singular solve."""
