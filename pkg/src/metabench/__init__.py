"""Exact computational algebra for split metabelian groups and their completions."""

__version__ = "0.1.0"
