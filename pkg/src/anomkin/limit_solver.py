"""Exact-in-time solution of the fractional diffusion limit ``d_t rho = -kappa |k|^alpha rho``."""
from __future__ import annotations

import numpy as np

from .model import ModelCase, alpha
from .spectral import SpectralDensity


def symbol(case: ModelCase, kappa: float, k) -> np.ndarray:
    return kappa * np.abs(np.asarray(k, dtype=float)) ** alpha(case)


def evolve(rho0: SpectralDensity, case: ModelCase, kappa: float, t: float) -> SpectralDensity:
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    damp = np.exp(-symbol(case, kappa, rho0.k) * t)
    return SpectralDensity(rho0.grid, rho0.amplitudes * damp)


def evolve_physical(grid, rho0_values, case: ModelCase, kappa: float, times):
    """Densities on the x-grid at each of ``times``; shape ``(len(times), n_x)``."""
    r0 = SpectralDensity.from_physical(grid, rho0_values)
    return np.array([evolve(r0, case, kappa, t).to_physical() for t in times])
