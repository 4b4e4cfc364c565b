"""Exact anisotropic Ising correlations as polynomials in complete elliptic integrals."""

__version__ = "0.1.0"
