"""Integral-only summation: multiple sums, multi-index series, lattice polytopes."""

__version__ = "0.1.0"
