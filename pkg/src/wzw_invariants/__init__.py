"""Modular data, fusion rules and modular invariants of A_r^(1) at level k."""

__version__ = "0.1.0"
