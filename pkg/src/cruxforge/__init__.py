"""Clique subdivisions in graphs of given crux."""

__version__ = "0.1.0"
