"""Alternating relaxed projections for two-set feasibility problems."""

__version__ = "1.0.0"
