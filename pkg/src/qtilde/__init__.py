"""Generalised positional expansions of [0, 1], their digit-restricted fractals,
and laws of points with independent digits."""

__version__ = "0.1.0"
