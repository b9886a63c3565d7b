"""Numerical laboratory for skew-shift Schrödinger cocycles and quadratic Weyl sums."""

__version__ = "0.1.0"
