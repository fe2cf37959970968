"""Exact computations with G-modules, G_rT-modules and their summand varieties."""

__version__ = "0.1.0"
