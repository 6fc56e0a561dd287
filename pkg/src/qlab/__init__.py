"""Exact Walsh phase-plane calculus and tree decompositions for the quartile operator."""

__version__ = "0.1.0"
