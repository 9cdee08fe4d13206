"""Besov-Morrey toolkit on the periodic torus.

Littlewood-Paley blocks, Morrey and Besov-Morrey norms, Bony paraproducts,
commutators, particle flow maps, and pseudo-spectral Euler / ideal MHD
solvers with successive-approximation drivers.
"""
from .grid import Grid, GridError, DivergenceError
from .morrey import BMParams, MorreyParams, ParameterError, WindowSet, besov_morrey_norm, morrey_norm
from .littlewood_paley import DyadicDecomposition, decompose, reconstruct
from .series import TimeSeries

__all__ = [
    "Grid", "GridError", "DivergenceError", "BMParams", "MorreyParams", "ParameterError", "WindowSet",
    "besov_morrey_norm", "morrey_norm", "DyadicDecomposition", "decompose", "reconstruct", "TimeSeries",
]
__version__ = "0.1.0"
