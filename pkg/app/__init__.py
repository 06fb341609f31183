"""
Quasiroots: spectral analysis of delay-PDE characteristic quasipolynomials.

This package locates, certifies and asymptotically predicts the characteristic
roots of the modal symbols of delayed heat and wave equations, and cross-checks
them against time-domain simulation of the modal delay equations.
"""

__version__ = "0.1.0"
