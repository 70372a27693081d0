"""Exact combinatorics of rational conical polyhedral complexes."""

__version__ = "0.1.0"
