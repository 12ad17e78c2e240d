"""Mutual-guided expert collaboration: shared and routed experts trained side by side."""

__version__ = "0.1.0"
