"""Parallel branch-and-prune solver for numerical constraint satisfaction problems."""

__version__ = "0.1.0"
