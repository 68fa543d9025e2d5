"""Numerical laboratory for solitary waves of the 1D Soler-type nonlinear Dirac equation.

The package evaluates the closed-form solitary waves for power nonlinearities
f(s) = s|s|^(p-1), discretizes the linearized operators L_mu and H_mu on a
periodic Fourier grid, and checks the closed-form spectral-stability bounds
against computed spectra.
"""

from dslab.model import ModelParams, derived, soliton_eval, density_power, effective_mass
from dslab.operators import Grid, DiscreteOperator, ParitySector

__all__ = [
    "ModelParams",
    "derived",
    "soliton_eval",
    "density_power",
    "effective_mass",
    "Grid",
    "DiscreteOperator",
    "ParitySector",
]

__version__ = "0.1.0"
