"""Curve-based brand style recognition toolkit."""

__version__ = "0.1.0"
