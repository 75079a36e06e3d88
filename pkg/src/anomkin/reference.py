"""Brute-force reference: classical RK4 on the full kinetic equation.

Each Fourier mode and plain velocity node is one ODE unknown::

    eps^a d/dt f_hat = -(nu + i eps k v) f_hat + nu M rho_nu_hat

Only usable when ``eps`` is not small (the time step must resolve ``nu / eps^a``).
With ``transport="upwind"`` the exact ``i k`` is replaced by the Fourier symbol
of the first-order upwind difference, which isolates time-stepping errors of
the grid-based schemes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Discretization, NumericalError
from .model import collision_frequency, equilibrium


@dataclass
class ReferenceResult:
    times: np.ndarray
    rho: np.ndarray  # <f>_h / <M>_h on the x-grid
    rho_nu: np.ndarray
    f_hat: np.ndarray


def upwind_symbol(k, v, dx):
    """Symbol ``s`` with ``D_up exp(ikx) = s exp(ikx)``, by sign of ``v``; shape ``(n_k, n_v)``."""
    kx = np.outer(k, np.ones_like(v)) * dx
    back = (1.0 - np.exp(-1j * kx)) / dx
    fwd = (np.exp(1j * kx) - 1.0) / dx
    return np.where(v > 0, back, fwd)


def integrate(disc: Discretization, substeps: int = 100, f0_hat=None,
              transport: str = "spectral") -> ReferenceResult:
    """Integrate to ``disc.T`` with step ``disc.dt / substeps``; records every ``disc.dt``."""
    xg, vg = disc.xgrid, disc.vgrid
    v, wv = vg.nodes, vg.weights
    M = equilibrium(disc.case, v)
    nu = collision_frequency(disc.case, v)
    nuM = float((nu * M) @ wv)
    massM = float(M @ wv)
    if transport == "spectral":
        dx_sym = 1j * np.outer(xg.k, np.ones_like(v))
    elif transport == "upwind":
        dx_sym = upwind_symbol(xg.k, v, xg.dx)
    else:
        raise ValueError(f"unknown transport {transport!r}")
    a = (nu + disc.eps * dx_sym * v) / disc.eps_alpha
    src = nu * M / (disc.eps_alpha * nuM)
    nuw = nu * wv

    def rhs(f):
        return -a * f + np.outer(f @ nuw, src)

    if f0_hat is None:
        f0 = disc.initial.sample(disc.case, xg.nodes, v)
        f0_hat = xg.forward(f0, axis=0)
    f = np.array(f0_hat, dtype=complex)
    h = disc.dt / substeps
    rho, rnu, times = [], [], []

    def rec(fh, t):
        rho.append(xg.inverse((fh @ wv) / massM).real)
        rnu.append(xg.inverse((fh @ nuw) / nuM).real)
        times.append(t)

    rec(f, 0.0)
    for n in range(disc.n_steps):
        for _ in range(substeps):
            k1 = rhs(f)
            k2 = rhs(f + 0.5 * h * k1)
            k3 = rhs(f + 0.5 * h * k2)
            k4 = rhs(f + h * k3)
            f = f + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(f)):
            raise NumericalError("reference integrator diverged", n + 1)
        rec(f, (n + 1) * disc.dt)
    return ReferenceResult(np.array(times), np.array(rho), np.array(rnu), f)


def integrate_micro_macro(disc: Discretization, substeps: int = 100) -> ReferenceResult:
    """RK4 on the space-discrete micro-macro system (the ``dt -> 0`` limit of the scheme).

    Uses the same upwind/downwind stencils as :mod:`anomkin.micromacro`, so the
    difference to that scheme is pure time-stepping error.  ``f_hat`` holds ``g``.
    """
    xg, vg = disc.xgrid, disc.vgrid
    v, wv = vg.nodes, vg.weights
    M = equilibrium(disc.case, v)
    nu = collision_frequency(disc.case, v)
    nuM = float((nu * M) @ wv)
    massM = float(M @ wv)
    speed = disc.eps ** (1.0 - disc.alpha)
    rate = nu / disc.eps_alpha

    def rhs(rho, g):
        vdf = v * xg.upwind_derivative(rho[:, None] * M + g, v)
        micro = vdf - np.outer(vdf @ wv, M) / massM
        coll = -rate * (g - np.outer((g @ (nu * wv)) / nuM, M))
        macro = (v * xg.upwind_derivative(g, -v)) @ wv
        return -speed * macro, -speed * micro + coll

    f0 = disc.initial.sample(disc.case, xg.nodes, v)
    rho = (f0 @ wv) / massM
    g = f0 - np.outer(rho, M)
    h = disc.dt / substeps
    rhos, rnus, times = [rho.copy()], [rho + (g @ (nu * wv)) / nuM], [0.0]
    for n in range(disc.n_steps):
        for _ in range(substeps):
            r1, g1 = rhs(rho, g)
            r2, g2 = rhs(rho + 0.5 * h * r1, g + 0.5 * h * g1)
            r3, g3 = rhs(rho + 0.5 * h * r2, g + 0.5 * h * g2)
            r4, g4 = rhs(rho + h * r3, g + h * g3)
            rho = rho + (h / 6.0) * (r1 + 2 * r2 + 2 * r3 + r4)
            g = g + (h / 6.0) * (g1 + 2 * g2 + 2 * g3 + g4)
        if not np.all(np.isfinite(g)):
            raise NumericalError("reference integrator diverged", n + 1)
        rhos.append(rho.copy())
        rnus.append(rho + (g @ (nu * wv)) / nuM)
        times.append((n + 1) * disc.dt)
    return ReferenceResult(np.array(times), np.array(rhos), np.array(rnus), g)
