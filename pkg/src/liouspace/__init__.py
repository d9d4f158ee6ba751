"""Liouville-space dynamics: classical, quantum, hybrid and general linear."""

__version__ = "0.1.0"
