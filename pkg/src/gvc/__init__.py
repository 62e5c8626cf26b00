"""gvc: graded variational calculus on jet coordinates.

Exact symbolic machinery for Lagrangian field theories with Grassmann-graded
fields: total derivatives and prolongations, Euler-Lagrange operators, Noether
identities with their higher-stage descent, Koszul-Tate and BRST differentials,
and a small theory-description language with four built-in gauge theories.
"""

from gvc.algebra import (
    GvcError,
    GradingError,
    JetOrderCapError,
    Registry,
    GradedPoly,
)
from gvc.parser import ParseError, TheorySpec, parse_expr, parse_theory
from gvc.theories import build_fixture, fixture_text, load_builtin

__version__ = "0.1.0"

__all__ = [
    "GvcError",
    "GradingError",
    "JetOrderCapError",
    "Registry",
    "GradedPoly",
    "ParseError",
    "TheorySpec",
    "parse_expr",
    "parse_theory",
    "build_fixture",
    "fixture_text",
    "load_builtin",
    "__version__",
]
