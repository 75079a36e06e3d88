"""Discretization parameters shared by the solvers."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .model import InitialData, ModelCase, alpha, collision_frequency
from .quadrature import SubstitutedGrid, VelocityGrid
from .spectral import XGrid

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, msg: str, step: int | None = None):
        super().__init__(msg if step is None else f"{msg} (step {step})")
        self.step = step


@dataclass(frozen=True)
class Discretization:
    case: ModelCase
    eps: float
    dt: float
    T: float = 0.1
    xgrid: XGrid = field(default_factory=XGrid)
    vgrid: VelocityGrid = field(default_factory=VelocityGrid)
    wgrid: SubstitutedGrid = field(default_factory=SubstitutedGrid)
    closure: str = "implicit"
    initial: InitialData = field(default_factory=InitialData)

    def __post_init__(self):
        for name in ("eps", "dt"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ConfigError(f"{name} must be positive, got {val}")
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be nonnegative, got {self.T}")
        if self.closure not in ("implicit", "explicit"):
            raise ConfigError(f"closure must be 'implicit' or 'explicit', got {self.closure!r}")

    @property
    def alpha(self) -> float:
        return alpha(self.case)

    @property
    def eps_alpha(self) -> float:
        return self.eps ** self.alpha

    @cached_property
    def n_steps(self) -> int:
        ratio = self.T / self.dt
        n = int(round(ratio))
        if abs(n - ratio) > 1e-9 * max(1.0, ratio):
            log.warning("T/dt = %.6g is not an integer; using %d steps (T = %.6g)",
                        ratio, n, n * self.dt)
        return n

    @property
    def times(self):
        return [n * self.dt for n in range(self.n_steps + 1)]

    def transport_cfl(self) -> float:
        """Largest per-node amplification factor of the explicit upwind micro update.

        ``max(1, |1 - 2c|) / (1 + dt nu / eps^alpha)`` with
        ``c = dt eps^(1-alpha) |v| / dx``; values above 1 flag instability.
        """
        v = self.vgrid.nodes
        c = self.dt * self.eps ** (1.0 - self.alpha) * np.abs(v) / self.xgrid.dx
        damp = 1.0 + self.dt * collision_frequency(self.case, v) / self.eps_alpha
        return float(np.max(np.maximum(1.0, np.abs(1.0 - 2.0 * c)) / damp))
