"""Velocity integration.

Plain brackets use the midpoint rule on a uniform grid of ``[-v_max, v_max]``.
The stiff quantities (the macro multiplier and the oscillatory Duhamel brackets)
are integrated in a substituted variable ``w`` in which the large-velocity
(heavy tail) or small-velocity (degenerate frequency) contributions that
generate the fractional symbol become O(1).  The ``w`` grid is the midpoint
rule in ``log|w|`` so that the algebraic singularities at ``w = 0`` and the slow
algebraic decay are both integrated accurately by a grid independent of
``eps`` and ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .model import ModelCase, alpha, collision_frequency, equilibrium


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class VelocityGrid:
    v_max: float = 5.0
    n_v: int = 200

    def __post_init__(self):
        if self.v_max <= 0:
            raise QuadratureError("v_max must be positive")
        if self.n_v <= 0 or self.n_v % 2:
            raise QuadratureError("n_v must be a positive even integer")

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_v

    @cached_property
    def nodes(self) -> np.ndarray:
        # built from |v| so that the grid is exactly symmetric
        half = (np.arange(self.n_v // 2) + 0.5) * self.dv
        return np.concatenate([-half[::-1], half])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.n_v, self.dv)


@dataclass(frozen=True)
class SubstitutedGrid:
    """Symmetric grid for the substituted variable ``w``.

    ``n_w // 2`` cells per half line, uniform in ``log|w|`` between ``w_min``
    and ``w_max``; nodes at the cell midpoints (in the log variable).
    """

    w_max: float = 100.0
    n_w: int = 800
    w_min: float = 1e-10

    def __post_init__(self):
        if not (0 < self.w_min < self.w_max):
            raise QuadratureError("need 0 < w_min < w_max")
        if self.n_w <= 0 or self.n_w % 2:
            raise QuadratureError("n_w must be a positive even integer")

    @property
    def du(self) -> float:
        return math.log(self.w_max / self.w_min) / (self.n_w // 2)

    @cached_property
    def _half(self) -> tuple[np.ndarray, np.ndarray]:
        u = math.log(self.w_min) + (np.arange(self.n_w // 2) + 0.5) * self.du
        w = np.exp(u)
        return w, w * self.du

    @cached_property
    def nodes(self) -> np.ndarray:
        w, _ = self._half
        return np.concatenate([-w[::-1], w])

    @cached_property
    def weights(self) -> np.ndarray:
        _, h = self._half
        return np.concatenate([h[::-1], h])

    def doubled(self) -> "SubstitutedGrid":
        """Twice the range (in ``w_max``) and twice the nodes."""
        return SubstitutedGrid(2.0 * self.w_max, 2 * self.n_w, self.w_min)


Grid = Union[VelocityGrid, SubstitutedGrid]


def bracket(fn: Union[Callable, np.ndarray], grid: Grid):
    """Midpoint-rule integral over the grid.

    ``fn`` is either a callable of the node array or an array of node values
    whose last axis runs over the nodes.
    """
    vals = fn(grid.nodes) if callable(fn) else np.asarray(fn)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("non-finite integrand value at a quadrature node")
    # add mirror nodes first: odd integrands then cancel exactly
    h = vals.shape[-1] // 2
    pairs = vals[..., :h][..., ::-1] + vals[..., h:]
    return pairs @ grid.weights[h:]


def kappa(case: ModelCase, grid: SubstitutedGrid) -> float:
    """Discrete fractional diffusion coefficient on the ``w`` grid.

    This is exactly the ``eps -> 0`` limit of ``transformed_I(k) / |k|^alpha``
    evaluated on the same grid.
    """
    w = np.abs(grid.nodes)
    if case.is_heavy_tail:
        vals = case.m * w ** (2.0 - case.beta) / (1.0 + w * w)
        return float(bracket(vals, grid))
    b = case.beta
    a = alpha(case)
    pref = case.m * case.nu0 ** (1.0 - a) / (case.d + 1.0 + b)
    vals = w ** (-2.0 / (2.0 + b)) / (1.0 + w * w)
    return float(pref * bracket(vals, grid))


def kappa_exact(case: ModelCase) -> float:
    """Closed form of the continuous coefficient."""
    if case.is_heavy_tail:
        # int_R |w|^(2-b)/(1+w^2) dw = pi / sin(pi (3-b)/2)
        return case.m * math.pi / math.sin(math.pi * (3.0 - case.beta) / 2.0)
    b = case.beta
    a = alpha(case)
    p = 2.0 / (2.0 + b)
    # int_R |w|^(-p)/(1+w^2) dw = pi / cos(pi p / 2)
    return case.m * case.nu0 ** (1.0 - a) / (2.0 + b) * math.pi / math.cos(math.pi * p / 2.0)


def substituted_velocity(case: ModelCase, eps_k: float, grid: SubstitutedGrid, scale=None):
    """Velocity nodes and Jacobian ``|dv/dw|`` of the substitution.

    Heavy tail: ``w = scale * v`` with ``scale = eps |k|`` unless given
    (the macro multiplier uses ``eps lambda |k|``).
    Degenerate: ``w = eps |k| v / nu(v)``.
    """
    w = grid.nodes
    if case.is_heavy_tail:
        s = eps_k if scale is None else scale
        return w / s, np.full_like(w, 1.0 / s)
    q = 1.0 / (2.0 + case.beta)
    c = (eps_k / case.nu0) ** q
    aw = np.abs(w)
    v = np.sign(w) * c * aw ** (-q)
    jac = q * c * aw ** (-(3.0 + case.beta) * q)
    return v, jac


def _lambda_const(case: ModelCase, dt: float, eps: float) -> float:
    return dt / (eps ** alpha(case) + dt)


def transformed_bracket(case: ModelCase, k: float, eps: float, dt: float,
                        grid: SubstitutedGrid, lam_power: int = 2) -> float:
    """``eps^(2-a) < nu lambda^p (k v)^2 M / (nu^2 + eps^2 lambda^2 (k v)^2) >`` in ``w``.

    ``lam_power = 2`` gives the macro multiplier; ``lam_power = 3`` gives
    ``eps^-a`` times the stiff bracket of the direct implicit scheme.
    """
    k = abs(k)
    if k == 0.0:
        return 0.0
    a = alpha(case)
    w = grid.nodes
    if case.is_heavy_tail:
        lam = _lambda_const(case, dt, eps)
        s = eps * lam * k
        M = equilibrium(case, w / s)
        total = bracket(w * w / (1.0 + w * w) * M, grid)
        return float(lam ** (lam_power - 2) * total / (eps ** (1.0 + a) * lam * k))
    v, jac = substituted_velocity(case, eps * k, grid)
    nu = collision_frequency(case, v)
    ea = eps ** a
    lam = dt * nu / (ea + dt * nu)
    M = equilibrium(case, v)
    w2 = w * w
    # nu * jac ~ eps^a, so form the product before dividing by eps^a
    vals = (nu * jac / ea) * lam ** lam_power * w2 / (1.0 + lam * lam * w2) * M
    return float(bracket(vals, grid))


def transformed_I(case: ModelCase, k: float, eps: float, dt: float, grid: SubstitutedGrid) -> float:
    """Macro Fourier multiplier of the micro-macro scheme (>= 0, even in ``k``)."""
    return transformed_bracket(case, k, eps, dt, grid, lam_power=2)


def direct_I(case: ModelCase, k: float, eps: float, dt: float, vgrid: VelocityGrid,
             complex_form: bool = False):
    """Macro multiplier by plain quadrature, no substitution (cross-check only)."""
    v = vgrid.nodes
    nu = collision_frequency(case, v)
    a = alpha(case)
    lam = dt * nu / (eps ** a + dt * nu)
    M = equilibrium(case, v)
    if complex_form:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(nu > 0, eps * lam / nu, 0.0)
        vals = lam * 1j * k * v / (1.0 + ratio * 1j * k * v) * M
        return eps ** (1.0 - a) * bracket(vals, vgrid)
    kv2 = (k * v) ** 2
    vals = nu * lam ** 2 * kv2 / (nu ** 2 + eps ** 2 * lam ** 2 * kv2) * M
    return float(eps ** (2.0 - a) * bracket(vals, vgrid))


# -- exponential time kernels ------------------------------------------------

SERIES_CUTOFF = 1e-3
_N_SERIES = 8


def _check_kernel_args(a, tau):
    a = np.asarray(a, dtype=complex)
    if np.any(a.real < 0):
        raise QuadratureError("kernel argument must have Re(a) >= 0")
    if np.any(np.asarray(tau) <= 0):
        raise QuadratureError("tau must be positive")
    return a


def kernel_E0(a, tau):
    """``int_0^tau exp(-a s) ds = (1 - exp(-a tau)) / a``."""
    a = _check_kernel_args(a, tau)
    z = a * tau
    small = np.abs(z) < SERIES_CUTOFF
    out = np.empty(np.broadcast(a, tau).shape, dtype=complex)
    zb = np.broadcast_to(z, out.shape)
    tb = np.broadcast_to(np.asarray(tau, dtype=float), out.shape)
    if np.any(small):
        zs = zb[small]
        # sum_{n>=0} (-z)^n / (n+1)!
        acc = np.zeros_like(zs)
        for n in range(_N_SERIES, -1, -1):
            acc = acc * (-zs) + 1.0 / math.factorial(n + 1)
        out[small] = tb[small] * acc
    big = ~small
    if np.any(big):
        ab = np.broadcast_to(a, out.shape)[big]
        out[big] = -np.expm1(-zb[big]) / ab
    return out if out.ndim else out[()]


def kernel_E1(a, tau):
    """``int_0^tau (s/tau) exp(-a s) ds = (1 - (1 + a tau) exp(-a tau)) / (a^2 tau)``."""
    a = _check_kernel_args(a, tau)
    z = a * tau
    small = np.abs(z) < SERIES_CUTOFF
    out = np.empty(np.broadcast(a, tau).shape, dtype=complex)
    zb = np.broadcast_to(z, out.shape)
    tb = np.broadcast_to(np.asarray(tau, dtype=float), out.shape)
    if np.any(small):
        zs = zb[small]
        # sum_{n>=2} (n-1) (-z)^(n-2) / n!
        acc = np.zeros_like(zs)
        for n in range(_N_SERIES + 2, 1, -1):
            acc = acc * (-zs) + (n - 1) / math.factorial(n)
        out[small] = tb[small] * acc
    big = ~small
    if np.any(big):
        zz = zb[big]
        num = -np.expm1(-zz) - zz * np.exp(-zz)
        out[big] = tb[big] * num / (zz * zz)
    return out if out.ndim else out[()]
