"""Symbolic-numeric tools for Lie systems of ordinary differential equations."""

__version__ = "0.1.0"
