"""Numerical lab for the closed quantum Toda chain and its rank-N Mathieu opers."""

__version__ = "0.1.0"
