"""Multiscale solvers for linear kinetic equations in the anomalous diffusion limit (1D)."""

from .model import (
    ModelCase,
    InitialData,
    alpha,
    equilibrium,
    collision_frequency,
    relaxation_factor,
    apply_collision,
)
from .quadrature import (
    VelocityGrid,
    SubstitutedGrid,
    bracket,
    kappa,
    transformed_I,
    kernel_E0,
    kernel_E1,
)
from .spectral import XGrid, SpectralDensity
from .config import ConfigError, Discretization, NumericalError
from . import duhamel, limit_solver, micromacro, reference

__version__ = "0.1.0"

__all__ = [
    "ModelCase",
    "InitialData",
    "alpha",
    "equilibrium",
    "collision_frequency",
    "relaxation_factor",
    "apply_collision",
    "VelocityGrid",
    "SubstitutedGrid",
    "bracket",
    "kappa",
    "transformed_I",
    "kernel_E0",
    "kernel_E1",
    "XGrid",
    "SpectralDensity",
    "ConfigError",
    "Discretization",
    "NumericalError",
    "limit_solver",
    "micromacro",
    "duhamel",
    "reference",
]
