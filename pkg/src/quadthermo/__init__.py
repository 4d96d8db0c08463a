"""Thermodynamic formalism toolkit for real quadratic maps f(x) = x^2 + c."""

__version__ = "0.1.0"
