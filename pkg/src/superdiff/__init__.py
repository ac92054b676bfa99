"""Floquet Heisenberg chains with rung interactions: typicality correlators and transport exponents."""

__version__ = "0.1.0"
