"""curvlab: a numerical laboratory for Hermitian metrics on coordinate charts.

The package computes Chern connection data (torsion, curvature, Ricci traces),
tempered curvature functionals, Gauduchon-family connection transforms,
Schwarz-lemma identity checks, and a tempered Hermitian curvature flow, all
from metrics given either as small closed-form expressions or as built-in
families with exact derivative jets.
"""

from .errors import ConfigError, CurvlabError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigError", "CurvlabError", "NumericalError", "__version__"]
