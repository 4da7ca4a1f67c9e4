"""Benchmark interactive data exploration backends."""

__version__ = "0.1.0"
