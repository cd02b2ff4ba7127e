"""Carpet IFS measures, lattice flows and S-arithmetic random walks."""

__version__ = "0.1.0"
