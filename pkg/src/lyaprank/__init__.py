"""Lyapunov exponents of rank-one matrix products along ergodic sequences."""

__version__ = "0.1.0"
