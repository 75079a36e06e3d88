"""Physical model: the two anomalous-diffusion regimes in one space dimension.

Case ``HEAVY_TAIL``: ``M(v) = m / (1 + |v|^beta)`` with ``1 < beta < 3`` and ``nu = 1``.
Case ``DEGENERATE``: Gaussian ``M`` and ``nu(v) = nu0 |v|^(3 + beta)``.

All functions broadcast over numpy arrays of velocities.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

D = 1  # space/velocity dimension


class Variant(str, enum.Enum):
    HEAVY_TAIL = "heavy_tail"
    DEGENERATE = "degenerate"


class ModelError(ValueError):
    """Invalid model parameters."""


@dataclass(frozen=True)
class ModelCase:
    variant: Variant
    beta: float
    nu0: float = 1.0
    d: int = D

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.d != D:
            raise ModelError(f"only d = {D} is supported, got d = {self.d}")
        if not math.isfinite(self.beta):
            raise ModelError("beta must be finite")
        if self.variant is Variant.HEAVY_TAIL:
            if not (self.d < self.beta < self.d + 2):
                raise ModelError(
                    f"heavy-tail case needs {self.d} < beta < {self.d + 2}, got {self.beta}"
                )
        else:
            if not self.beta > 0:
                raise ModelError(f"degenerate case needs beta > 0, got {self.beta}")
            if not (self.nu0 > 0 and math.isfinite(self.nu0)):
                raise ModelError(f"degenerate case needs nu0 > 0, got {self.nu0}")

    @classmethod
    def heavy_tail(cls, beta: float = 2.5) -> "ModelCase":
        return cls(Variant.HEAVY_TAIL, beta)

    @classmethod
    def degenerate(cls, beta: float = 0.5, nu0: float = 1.0) -> "ModelCase":
        return cls(Variant.DEGENERATE, beta, nu0)

    @property
    def is_heavy_tail(self) -> bool:
        return self.variant is Variant.HEAVY_TAIL

    @property
    def alpha(self) -> float:
        return alpha(self)

    @property
    def m(self) -> float:
        """Normalization constant, i.e. ``M(0)``."""
        if self.is_heavy_tail:
            # int_R dv / (1 + |v|^b) = 2 (pi/b) / sin(pi/b)
            r = math.pi / self.beta
            return 1.0 / (2.0 * r / math.sin(r))
        return 1.0 / math.sqrt(2.0 * math.pi)


def alpha(case: ModelCase) -> float:
    """Time-scaling exponent of the anomalous diffusion limit."""
    b, d = case.beta, case.d
    if case.is_heavy_tail:
        return b - d
    return (2.0 + 2.0 * d + b) / (1.0 + d + b)


def equilibrium(case: ModelCase, v):
    v = np.asarray(v, dtype=float)
    if case.is_heavy_tail:
        return case.m / (1.0 + np.abs(v) ** case.beta)
    return np.exp(-0.5 * v * v) / math.sqrt(2.0 * math.pi)


def collision_frequency(case: ModelCase, v):
    v = np.asarray(v, dtype=float)
    if case.is_heavy_tail:
        return np.ones_like(v)
    return case.nu0 * np.abs(v) ** (case.d + 2 + case.beta)


def relaxation_factor(case: ModelCase, v, dt: float, eps: float):
    """``lambda(v) = dt nu / (eps^alpha + dt nu)``, in [0, 1)."""
    if dt <= 0 or eps <= 0:
        raise ModelError("dt and eps must be positive")
    nu = collision_frequency(case, v)
    ea = eps ** alpha(case)
    return dt * nu / (ea + dt * nu)


def rho_nu(case: ModelCase, f, vgrid):
    """Weighted density ``<nu f> / <nu M>`` on the plain velocity grid (last axis of ``f``)."""
    nu = collision_frequency(case, vgrid.nodes)
    M = equilibrium(case, vgrid.nodes)
    return (f @ (nu * vgrid.weights)) / np.sum(nu * M * vgrid.weights)


def apply_collision(case: ModelCase, f, vgrid):
    """Linear relaxation operator ``nu (rho_nu M - f)``; velocity is the last axis."""
    f = np.asarray(f)
    nu = collision_frequency(case, vgrid.nodes)
    M = equilibrium(case, vgrid.nodes)
    rn = rho_nu(case, f, vgrid)
    return nu * (np.asarray(rn)[..., None] * M - f)


def _one_plus_sin(x):
    return 1.0 + np.sin(np.pi * x)


@dataclass(frozen=True)
class InitialData:
    """``f0(x, v) = density(x) M(v) + micro(x, v)``.

    ``micro`` is optional; without it the data is well prepared.
    """

    density: Callable = field(default=_one_plus_sin)
    micro: Optional[Callable] = None

    @classmethod
    def well_prepared(cls, density: Callable = _one_plus_sin) -> "InitialData":
        return cls(density=density)

    @property
    def is_well_prepared(self) -> bool:
        return self.micro is None

    def sample(self, case: ModelCase, x, v) -> np.ndarray:
        """Values on the tensor grid, shape ``(len(x), len(v))``."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        f = np.outer(self.density(x), equilibrium(case, v))
        if self.micro is not None:
            f = f + self.micro(x[:, None], v[None, :])
        if not np.all(np.isfinite(f)):
            raise ModelError("initial data is not finite on the grid")
        return f
