"""Fairness-aware ensemble classification."""

__version__ = "0.1.0"
