"""Truncated sampling-series reconstructions and divergence experiments."""

__version__ = "0.1.0"
