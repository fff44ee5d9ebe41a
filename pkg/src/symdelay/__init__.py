"""Symmetrized time delay: geometry, classical and 1-D quantum scattering."""

__version__ = "0.1.0"
