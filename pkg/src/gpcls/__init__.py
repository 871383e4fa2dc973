"""Weighted least-squares recovery of parametric functions in polynomial chaos bases."""

__version__ = "0.1.0"
