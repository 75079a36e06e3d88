"""Micro-macro asymptotic-preserving scheme and the direct implicit AP scheme.

The unknowns are ``f = rho M + g`` with ``<g> = 0`` on the plain velocity grid.
Because the truncated grid does not carry the full mass of ``M``, the discrete
projection is ``Pi f = <f> M / <M>_h`` and ``rho = <f>_h / <M>_h``; with this
choice the micro part is exactly neutral and well-prepared data has ``g = 0``.

The micro update is explicit in the (upwind) transport and implicit in the
collisions; the macro update is carried out mode by mode in Fourier space with
the multiplier from :func:`anomkin.quadrature.transformed_I`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import Discretization, NumericalError
from .model import collision_frequency, equilibrium
from .quadrature import transformed_bracket, transformed_I

log = logging.getLogger(__name__)

# densities of the kinetic problem stay bounded by their initial size; growth
# by this factor means the explicit transport went unstable
GROWTH_LIMIT = 1e6


@dataclass
class MacroMicroState:
    rho: np.ndarray  # (n_x,)
    g: np.ndarray  # (n_x, n_v)
    n: int = 0
    dt: float = 0.0

    @property
    def t(self) -> float:
        return self.n * self.dt

    def recompose(self, M) -> np.ndarray:
        return self.rho[:, None] * M + self.g


class _Ops:
    """Grid quantities reused at every step of a run."""

    def __init__(self, disc: Discretization):
        self.disc = disc
        v = disc.vgrid.nodes
        self.v = v
        self.wv = disc.vgrid.weights
        self.M = equilibrium(disc.case, v)
        self.nu = collision_frequency(disc.case, v)
        self.mass_M = float(self.M @ self.wv)
        self.nuM = float((self.nu * self.M) @ self.wv)
        self.stiff = disc.dt * self.nu / disc.eps_alpha
        self._I = None

    @property
    def I(self) -> np.ndarray:
        if self._I is None:
            d = self.disc
            self._I = np.array([transformed_I(d.case, k, d.eps, d.dt, d.wgrid)
                                for k in d.xgrid.k])
        return self._I

    def br(self, vals):
        return vals @ self.wv

    def transport(self, rho, g):
        """``(I - Pi)(v d_x(rho M + g))``, upwind in x.

        The upwind stencil depends on sign(v), so ``<v M d_x rho>`` is not zero
        on the grid; projecting the whole term keeps ``<g> = 0`` exactly.
        """
        xg = self.disc.xgrid
        f = rho[:, None] * self.M + g
        vdf = self.v * xg.upwind_derivative(f, self.v)
        return vdf - np.outer(self.br(vdf), self.M) / self.mass_M


def decompose(f0: np.ndarray, disc: Discretization) -> MacroMicroState:
    ops = _Ops(disc)
    f0 = np.asarray(f0, dtype=float)
    rho = ops.br(f0) / ops.mass_M
    g = f0 - np.outer(rho, ops.M)
    return MacroMicroState(rho, g, 0, disc.dt)


def initial_state(disc: Discretization) -> MacroMicroState:
    f0 = disc.initial.sample(disc.case, disc.xgrid.nodes, disc.vgrid.nodes)
    return decompose(f0, disc)


def _extract(ops: _Ops, rhs: np.ndarray) -> np.ndarray:
    """``<nu g^{n+1}>`` given the explicit part ``rhs = g^n - dt eps^(1-a) T^n``."""
    A = 1.0 + ops.stiff
    num = ops.br(ops.nu * rhs / A)
    # 1 - dt/(eps^a <nu M>) <nu^2 M / A> == <nu M / A> / <nu M>
    den = ops.br(ops.nu * ops.M / A) / ops.nuM
    if den <= 0:
        raise NumericalError("non-positive denominator in <nu g> extraction")
    return num / den


def extract_nu_g(state: MacroMicroState, disc: Discretization, ops: _Ops | None = None) -> np.ndarray:
    """``<nu g^{n+1}>`` as a function of x (degenerate case)."""
    ops = ops or _Ops(disc)
    rhs = state.g - disc.dt * disc.eps ** (1.0 - disc.alpha) * ops.transport(state.rho, state.g)
    return _extract(ops, rhs)


def micro_step(state: MacroMicroState, disc: Discretization, ops: _Ops | None = None):
    """Return ``(g^{n+1}, <nu g^{n+1}>)``."""
    ops = ops or _Ops(disc)
    rhs = state.g - disc.dt * disc.eps ** (1.0 - disc.alpha) * ops.transport(state.rho, state.g)
    A = 1.0 + ops.stiff
    if disc.case.is_heavy_tail:
        nu_g = np.zeros_like(state.rho)
        g_next = rhs / A
    else:
        nu_g = _extract(ops, rhs)
        g_next = (rhs + ops.stiff * np.outer(nu_g / ops.nuM, ops.M)) / A
    if not np.all(np.isfinite(g_next)):
        raise NumericalError("micro update produced non-finite values", state.n + 1)
    # <g_next> = 0 holds in exact arithmetic; remove the roundoff left by the
    # cancelling transport terms, which can be much larger than g itself
    g_next -= np.outer(ops.br(g_next), ops.M) / ops.mass_M
    return g_next, nu_g


def macro_step(state: MacroMicroState, g_next: np.ndarray, nu_g_next: np.ndarray,
               disc: Discretization, ops: _Ops | None = None) -> np.ndarray:
    ops = ops or _Ops(disc)
    xg = disc.xgrid
    # downwind stencil: the adjoint of the upwind derivative used for the
    # rho source in the micro equation, so the coupling conserves energy
    flux = disc.eps * ops.br(ops.v * xg.upwind_derivative(state.g, -ops.v)
                             / (disc.eps_alpha + ops.nu * disc.dt))
    rho_h = xg.forward(state.rho)
    corr_h = xg.forward(nu_g_next / ops.nuM)
    flux_h = xg.forward(flux)
    I, dt = ops.I, disc.dt
    if disc.closure == "implicit":
        new_h = (rho_h - dt * (I * corr_h + flux_h)) / (1.0 + dt * I)
    else:
        new_h = rho_h - dt * (I * rho_h + I * corr_h + flux_h)
    rho = xg.inverse(new_h).real
    if not np.all(np.isfinite(rho)):
        raise NumericalError("macro update produced non-finite values", state.n + 1)
    return rho


def step(state: MacroMicroState, disc: Discretization, ops: _Ops | None = None) -> MacroMicroState:
    ops = ops or _Ops(disc)
    g_next, nu_g = micro_step(state, disc, ops)
    rho_next = macro_step(state, g_next, nu_g, disc, ops)
    return MacroMicroState(rho_next, g_next, state.n + 1, disc.dt)


@dataclass
class Trajectory:
    times: np.ndarray
    rho: np.ndarray  # (n_times, n_x)
    rho_nu: np.ndarray
    final: object = None


def run(disc: Discretization, state: MacroMicroState | None = None, record: bool = True) -> Trajectory:
    """Micro-macro time loop up to ``disc.T``."""
    ops = _Ops(disc)
    if disc.transport_cfl() > 1.0:
        log.warning("explicit micro transport may be unstable: amplification %.3g > 1 "
                    "(eps=%g, dt=%g)", disc.transport_cfl(), disc.eps, disc.dt)
    state = state or initial_state(disc)
    rhos, rnus, times = [], [], []

    def rec(s):
        rhos.append(s.rho.copy())
        rnus.append(s.rho + ops.br(ops.nu * s.g) / ops.nuM)
        times.append(s.t)

    rec(state)
    bound = GROWTH_LIMIT * max(1.0, float(np.max(np.abs(state.rho))))
    for _ in range(disc.n_steps):
        state = step(state, disc, ops)
        if np.max(np.abs(state.rho)) > bound:
            raise NumericalError("micro-macro density grew without bound", state.n)
        if record or state.n == disc.n_steps:
            rec(state)
    return Trajectory(np.array(times), np.array(rhos), np.array(rnus), state)


# -- direct implicit AP scheme -----------------------------------------------

class _ImplicitOps:
    def __init__(self, disc: Discretization):
        d = disc
        v = d.vgrid.nodes
        self.wv = d.vgrid.weights
        self.M = equilibrium(d.case, v)
        self.nu = collision_frequency(d.case, v)
        self.mass_M = float(self.M @ self.wv)
        self.nuM = float((self.nu * self.M) @ self.wv)
        self.lam = d.dt * self.nu / (d.eps_alpha + d.dt * self.nu)
        # eps lambda / nu, finite where nu = 0
        ratio = d.eps * d.dt / (d.eps_alpha + d.dt * self.nu)
        k = d.xgrid.k
        self.R = 1.0 / (1.0 + 1j * ratio * np.outer(k, v))
        self.lamM = float((self.lam * self.M) @ self.wv)
        # dt/eps^a * Re<nu lam M (1 - R)>, through the substituted variable
        self.J = np.array([d.dt * transformed_bracket(d.case, kk, d.eps, d.dt, d.wgrid, lam_power=3)
                           for kk in k])


def implicit_step(f_hat: np.ndarray, disc: Discretization, ops: _ImplicitOps | None = None):
    """One step of the implicit formulation; returns ``(f_hat^{n+1}, rho_nu_hat^{n+1})``.

    Multiplying the update by ``nu`` and integrating in ``v`` gives, per mode,
    ``rho_nu (<lam M> + dt eps^-a <nu lam M (1-R)>) = <lam R f^n>`` (after division
    by ``eps^a / dt``), where ``R = (1 + i eps lam k v / nu)^-1``.
    """
    ops = ops or _ImplicitOps(disc)
    Rf = ops.R * f_hat
    rnu = ((ops.lam * Rf) @ ops.wv) / (ops.lamM + ops.J)
    f_next = ops.lam * ops.R * (rnu[:, None] * ops.M) + (1.0 - ops.lam) * Rf
    return f_next, rnu


def run_implicit(disc: Discretization, record: bool = True) -> Trajectory:
    ops = _ImplicitOps(disc)
    xg = disc.xgrid
    f0 = disc.initial.sample(disc.case, xg.nodes, disc.vgrid.nodes)
    f_hat = xg.forward(f0, axis=0)
    rhos, rnus, times = [], [], []

    def rec(fh, n):
        rho_h = (fh @ ops.wv) / ops.mass_M
        rnu_h = (fh @ (ops.nu * ops.wv)) / ops.nuM
        rhos.append(xg.inverse(rho_h).real)
        rnus.append(xg.inverse(rnu_h).real)
        times.append(n * disc.dt)

    rec(f_hat, 0)
    for n in range(1, disc.n_steps + 1):
        f_hat, _ = implicit_step(f_hat, disc, ops)
        if not np.all(np.isfinite(f_hat)):
            raise NumericalError("implicit update produced non-finite values", n)
        if record or n == disc.n_steps:
            rec(f_hat, n)
    return Trajectory(np.array(times), np.array(rhos), np.array(rnus), f_hat)
