"""Synthetic heart-rate-variability analysis and visualization toolkit."""

__version__ = "0.1.0"
