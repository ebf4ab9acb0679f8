"""Explicit constructions and machine verification of elusive permutation groups."""

__version__ = "0.1.0"
