"""Exact arithmetic: F_p scalars, sparse polynomials, quotient rings, chart functions."""
from .fp import FpScalar, is_prime, check_prime
from .mpoly import MPoly, parse_poly, format_poly, PolyParseError, grlex_key
from .normal import normal_form
from .ring import HyperRing
from .chart import ChartFunction, chart_transition, truncated_basis, window_monomials, as_chart

__all__ = [
    "FpScalar", "is_prime", "check_prime", "MPoly", "parse_poly", "format_poly",
    "PolyParseError", "grlex_key", "normal_form", "HyperRing", "ChartFunction",
    "chart_transition", "truncated_basis", "window_monomials", "as_chart",
]
