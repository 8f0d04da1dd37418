"""Desk-scale laboratory for the density-increment strategy on 5-term progressions."""

__version__ = "0.1.0"
