import numpy as np
import pytest

from anomkin import reference
from anomkin.config import Discretization
from anomkin.model import InitialData, ModelCase, equilibrium
from anomkin.quadrature import VelocityGrid
from anomkin.spectral import XGrid

H = ModelCase.heavy_tail(2.5)


def test_homogeneous_relaxation_closed_form():
    # rho_nu is conserved at k = 0 and f relaxes to rho M at rate 1/eps^alpha
    bump = InitialData(lambda x: np.ones_like(x), micro=lambda x, v: 0.1 * np.exp(-v ** 2) * (v > 0))
    d = Discretization(H, 0.5, 1e-2, T=0.05, xgrid=XGrid(4), vgrid=VelocityGrid(5.0, 40), initial=bump)
    res = reference.integrate(d, substeps=20)
    f0 = bump.sample(H, d.xgrid.nodes, d.vgrid.nodes)[0]
    M = equilibrium(H, d.vgrid.nodes)
    r = (f0 @ d.vgrid.weights) / (M @ d.vgrid.weights)
    decay = np.exp(-d.T / d.eps_alpha)
    np.testing.assert_allclose(res.f_hat[0], decay * f0 + (1 - decay) * r * M, rtol=1e-9)
    np.testing.assert_allclose(res.rho_nu[:, 0], r, rtol=1e-12)


def test_upwind_symbol_matches_stencil():
    g = XGrid(16)
    v = np.array([-1.0, 1.0])
    sym = reference.upwind_symbol(g.k, v, g.dx)
    for j in (1, 3, -5):
        mode = np.exp(1j * g.k[j] * g.nodes)[:, None] * np.ones(2)
        np.testing.assert_allclose(g.upwind_derivative(mode, v), mode * sym[j], atol=1e-12)


def test_unknown_transport():
    with pytest.raises(ValueError):
        reference.integrate(Discretization(H, 1.0, 1e-3, T=1e-3), transport="centred")


def test_micro_macro_oracle_conserves_mass():
    d = Discretization(ModelCase.degenerate(0.5), 1.0, 1e-3, T=5e-3)
    res = reference.integrate_micro_macro(d, substeps=5)
    s = res.rho.sum(axis=1)
    np.testing.assert_allclose(s, s[0], rtol=1e-13)
