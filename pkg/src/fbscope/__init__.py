"""Numerical toolkit for variational solutions of the one-phase Bernoulli problem."""

__version__ = "0.1.0"
