"""Simulation and verification lab for trimmed sums of Oppenheim expansions."""

__version__ = "0.1.0"
