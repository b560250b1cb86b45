"""Finite-blocklength converse bounds for distributed and point-to-point
source coding: LP relaxations with exact duals, closed-form metaconverses,
dual-feasible-point constructors, and brute-force optima for validation."""

__version__ = "0.1.0"
