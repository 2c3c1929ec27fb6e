"""Factorization method for 2D inverse acoustic scattering from phaseless total-field data."""

__version__ = "0.1.0"
