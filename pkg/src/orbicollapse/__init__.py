"""Spectral geometry of collapsing connected sums of 2-orbifolds."""

__version__ = "0.1.0"
