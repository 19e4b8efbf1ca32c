"""Numerical laboratory for 1D time-sliced path integrals."""

__version__ = "0.1.0"
