"""Isoperimetry, lp-spectral constants and transport patterns on graphs."""

__version__ = "0.1.0"
