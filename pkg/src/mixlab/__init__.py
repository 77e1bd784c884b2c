"""Projected stochastic Langevin sampling with mixing-time bounds and exact oracles."""

__version__ = "0.1.0"
