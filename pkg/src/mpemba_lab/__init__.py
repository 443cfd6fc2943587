"""Desk-scale laboratory for the Mpemba effect in weakly open spin chains."""

__version__ = "0.1.0"
