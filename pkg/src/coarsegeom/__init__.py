"""Finite-horizon certificates for coarse geometry of countable groups."""

__version__ = "0.1.0"
