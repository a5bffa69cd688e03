"""Deterministic headless 2D social-navigation simulator and benchmark harness."""

__version__ = "0.1.0"
