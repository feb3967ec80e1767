"""Numerical toolkit for warped mu-bubbles on torical bands."""

__version__ = "0.1.0"
