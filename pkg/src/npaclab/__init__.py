"""Neugebauer-primary print color pipeline over a simulated press."""

__version__ = "0.1.0"
