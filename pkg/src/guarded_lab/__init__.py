"""Guarded Lab - finite-scale checks for synthetic guarded domain theory."""

__version__ = "0.1.0"
