"""Uniformly accurate scheme built on the Duhamel formulation for ``rho_nu``.

Per Fourier mode ``k`` the weighted density obeys a Volterra equation whose
kernel is ``<exp(-s (nu + i eps k v)) nu^2 M>``.  ``rho_nu`` is interpolated
linearly on each time step, the integrals over ``s`` are done in closed form
per velocity node (kernels ``E0``, ``E1``), and the velocity brackets are split
into a non-oscillating part on the plain grid and an oscillating difference on
the substituted ``w`` grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Discretization, NumericalError
from .model import collision_frequency, equilibrium
from .quadrature import kernel_E0, kernel_E1, substituted_velocity

UNDERFLOW = 1e-300


class _Velocity:
    def __init__(self, disc: Discretization):
        d = disc
        self.disc = d
        self.v = d.vgrid.nodes
        self.wv = d.vgrid.weights
        self.M = equilibrium(d.case, self.v)
        self.nu = collision_frequency(d.case, self.v)
        self.nuM = float((self.nu * self.M) @ self.wv)
        self.tau = d.dt / d.eps_alpha
        # plain-grid kernels at a = nu, shared by every lag
        self.E0_nu = kernel_E0(self.nu, self.tau).real
        self.E1_nu = kernel_E1(self.nu, self.tau).real
        self._subst = {}

    def substituted(self, k: float):
        """Nodes, weights and kernels of the substituted grid for mode ``k``."""
        key = abs(k)
        if key not in self._subst:
            d = self.disc
            v, jac = substituted_velocity(d.case, d.eps * key, d.wgrid)
            nu = collision_frequency(d.case, v)
            weight = d.wgrid.weights * jac * nu * nu * equilibrium(d.case, v)
            a = nu + 1j * d.eps * key * v
            self._subst[key] = (v, nu, a, weight,
                                kernel_E0(a, self.tau), kernel_E1(a, self.tau),
                                kernel_E0(nu, self.tau).real, kernel_E1(nu, self.tau).real)
        return self._subst[key]


def _plain_brackets(vel: _Velocity, j: int):
    s = j * vel.tau
    decay = np.exp(-vel.nu * s)
    w = vel.wv * vel.nu ** 2 * vel.M * decay
    return float(w @ vel.E0_nu), float(w @ vel.E1_nu)


def _second_brackets(vel: _Velocity, j: int, k: float):
    if k == 0.0:
        return 0.0j, 0.0j
    v, nu, a, weight, E0a, E1a, E0n, E1n = vel.substituted(k)
    s = j * vel.tau
    ea = np.exp(-a * s)
    en = np.exp(-nu * s)
    c = weight @ (ea * E0a - en * E0n)
    b = weight @ (ea * E1a - en * E1n)
    if k < 0:
        # the substituted integral is written for |k|; k -> -k conjugates
        c, b = np.conj(c), np.conj(b)
    return complex(c), complex(b)


def coefficients(j: int, k: float, disc: Discretization, _vel: _Velocity | None = None):
    """Weights ``(b_j, c_j)`` for lag ``j`` and mode ``k``."""
    if j < 0:
        raise ValueError("lag index must be nonnegative")
    vel = _vel or _Velocity(disc)
    pc, pb = _plain_brackets(vel, j)
    sc, sb = _second_brackets(vel, j, k)
    return pb + sb, pc + sc


@dataclass
class CoefficientTable:
    k: np.ndarray
    b: np.ndarray  # (n_lags, n_k)
    c: np.ndarray
    nuM: float
    den: np.ndarray  # 1 - (c_0 - b_0)/<nu M>, formed without cancellation
    kernel_evals: int = 0

    @property
    def n_lags(self) -> int:
        return self.b.shape[0]


def build_table(disc: Discretization, n_lags: int | None = None,
                vel: _Velocity | None = None) -> CoefficientTable:
    vel = vel or _Velocity(disc)
    n_lags = disc.n_steps if n_lags is None else n_lags
    k = disc.xgrid.k
    nk = len(k)
    b = np.zeros((n_lags, nk), dtype=complex)
    c = np.zeros((n_lags, nk), dtype=complex)
    count = 0
    for j in range(n_lags):
        pc, pb = _plain_brackets(vel, j)
        count += len(vel.v)
        for i, kk in enumerate(k):
            sc, sb = _second_brackets(vel, j, kk)
            if kk != 0.0:
                count += len(disc.wgrid.nodes)
            b[j, i] = pb + sb
            c[j, i] = pc + sc
    # <nu M> - (plain c_0) = <nu M exp(-nu tau)> exactly
    rest = float((vel.wv * vel.nu * vel.M) @ np.exp(-vel.nu * vel.tau))
    pc0, pb0 = _plain_brackets(vel, 0)
    den = np.empty(nk, dtype=complex)
    for i, kk in enumerate(k):
        sc0, sb0 = _second_brackets(vel, 0, kk)
        den[i] = (rest + pb0 - sc0 + sb0) / vel.nuM
    return CoefficientTable(k, b, c, vel.nuM, den, count)


def a0(t: float, k, disc: Discretization, f0_hat=None, _vel: _Velocity | None = None):
    """Free-streaming term ``<exp(-(t/eps^a)(nu + i eps k v)) nu f0_hat> / <nu M>``.

    ``k`` may be an array of modes; ``f0_hat`` then has shape ``(len(k), n_v)``.
    """
    vel = _vel or _Velocity(disc)
    k = np.asarray(k, dtype=float)
    if f0_hat is None:
        f0_hat = _initial_hat(disc)[_mode_index(disc, k)]
    phase = np.exp(-(t / disc.eps_alpha) * (vel.nu + 1j * disc.eps * np.multiply.outer(k, vel.v)))
    out = ((phase * vel.nu * f0_hat) @ vel.wv) / vel.nuM
    out = np.where(np.abs(out) < UNDERFLOW, 0.0, out)
    return out if np.ndim(out) else complex(out)


def _initial_hat(disc: Discretization) -> np.ndarray:
    xg = disc.xgrid
    f0 = disc.initial.sample(disc.case, xg.nodes, disc.vgrid.nodes)
    return xg.forward(f0, axis=0)


def _mode_index(disc: Discretization, k):
    kk = disc.xgrid.k
    idx = np.array([int(np.argmin(np.abs(kk - x))) for x in np.atleast_1d(k)])
    return idx if np.ndim(k) else idx[0]


@dataclass
class HistoryBuffer:
    values: list = field(default_factory=list)  # rho_nu_hat^n, each (n_k,)

    def __len__(self):
        return len(self.values)

    def append(self, r):
        r = np.asarray(r)
        if not np.all(np.isfinite(r)):
            raise NumericalError("non-finite rho_nu", len(self.values))
        self.values.append(r)

    def array(self) -> np.ndarray:
        return np.array(self.values)


def step(history: HistoryBuffer, table: CoefficientTable, n: int, A0_next) -> np.ndarray:
    """``rho_nu_hat^{n+1}`` for all modes from the history through step ``n``."""
    if len(history) != n + 1:
        raise ValueError(f"history has {len(history)} entries, expected {n + 1}")
    if table.n_lags < n + 1:
        raise ValueError("coefficient table too short")
    H = history.values
    acc = table.b[0] * H[n]
    for j in range(1, n + 1):
        acc = acc + (table.c[j] - table.b[j]) * H[n + 1 - j] + table.b[j] * H[n - j]
    return (A0_next + acc / table.nuM) / table.den


@dataclass
class DuhamelResult:
    times: np.ndarray
    rho_nu: np.ndarray  # (n_times, n_x)
    rho_nu_hat: np.ndarray  # (n_times, n_k)
    table: CoefficientTable
    history_terms: int = 0


def run(disc: Discretization, record: bool = True) -> DuhamelResult:
    vel = _Velocity(disc)
    N = disc.n_steps
    table = build_table(disc, max(N, 1), vel)
    xg = disc.xgrid
    f0_hat = _initial_hat(disc)
    hist = HistoryBuffer()
    hist.append((f0_hat @ (vel.nu * vel.wv)) / vel.nuM)
    terms = 0
    for n in range(N):
        A0 = a0((n + 1) * disc.dt, xg.k, disc, f0_hat, vel)
        hist.append(step(hist, table, n, A0))
        terms += (n + 1) * len(xg.k)
    R = hist.array()
    keep = np.arange(N + 1) if record else np.array([0, N])
    rho_nu = np.array([xg.inverse(R[i]).real for i in keep])
    return DuhamelResult(keep * disc.dt, rho_nu, R[keep], table, terms)


def reconstruct_f(history, disc: Discretization, n: int, f0_hat=None) -> np.ndarray:
    """``f_hat^n(k, v)`` on the plain grid from the stored ``rho_nu`` history."""
    vel = _Velocity(disc)
    H = history.array() if isinstance(history, HistoryBuffer) else np.asarray(history)
    if f0_hat is None:
        f0_hat = _initial_hat(disc)
    k = disc.xgrid.k
    a = vel.nu + 1j * disc.eps * np.outer(k, vel.v)  # (n_k, n_v)
    tau = vel.tau
    E0 = kernel_E0(a, tau)
    E1 = kernel_E1(a, tau)
    f = np.exp(-a * (n * tau)) * f0_hat
    for j in range(n):
        e = np.exp(-a * (j * tau))
        f = f + vel.nu * vel.M * e * ((E0 - E1) * H[n - j][:, None] + E1 * H[n - 1 - j][:, None])
    return f
