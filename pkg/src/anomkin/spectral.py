"""Periodic x-grid on [-1, 1) and Fourier representation of densities."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class XGrid:
    n_x: int = 64
    x_min: float = -1.0
    x_max: float = 1.0

    def __post_init__(self):
        if self.n_x <= 0 or self.n_x % 2:
            raise ValueError("n_x must be a positive even integer")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_x

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_x)

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers in FFT order; ``k_j = pi j`` on the default domain."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_x, d=self.dx)

    def forward(self, u, axis: int = 0) -> np.ndarray:
        return np.fft.fft(u, axis=axis) / self.n_x

    def inverse(self, uh, axis: int = 0) -> np.ndarray:
        return np.fft.ifft(np.asarray(uh) * self.n_x, axis=axis)

    def upwind_derivative(self, g, v) -> np.ndarray:
        """First-order upwind ``d/dx`` of ``g[x, v]`` for advection speed ``sign(v)``."""
        back = (g - np.roll(g, 1, axis=0)) / self.dx
        fwd = (np.roll(g, -1, axis=0) - g) / self.dx
        return np.where(np.asarray(v) > 0, back, fwd)


@dataclass
class SpectralDensity:
    """Complex amplitudes of a 2-periodic function on the modes of ``grid``."""

    grid: XGrid
    amplitudes: np.ndarray

    @classmethod
    def from_physical(cls, grid: XGrid, values) -> "SpectralDensity":
        return cls(grid, grid.forward(np.asarray(values, dtype=float)))

    @property
    def k(self) -> np.ndarray:
        return self.grid.k

    def to_physical(self) -> np.ndarray:
        return self.grid.inverse(self.amplitudes).real

    def hermitian_defect(self) -> float:
        """``max |a(-k) - conj(a(k))|``, ignoring the unpaired Nyquist mode."""
        a = self.amplitudes
        n = len(a)
        j = np.arange(1, n // 2)
        return float(np.max(np.abs(a[-j] - np.conj(a[j])), initial=0.0))
