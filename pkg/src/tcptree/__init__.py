"""Threshold contact processes on homogeneous trees.

Submodules
----------
topology   tree addressing, neighbourhoods and finite truncations
meanfield  tail functions, the mean-field ODE and its critical points
graphical  Poisson-mark construction, evolution and coupling
bootstrap  bootstrap percolation recursion, grades and span bounds
estimator  Monte Carlo densities and finite-time dichotomy probes
cli        command-line front end
"""

from ._backend import NAME as BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
