"""Smooth dynamic path planning on time-warped harmonic grids."""

__version__ = "0.1.0"
