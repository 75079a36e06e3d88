import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from anomkin.model import ModelCase, alpha, equilibrium
from anomkin.quadrature import (
    SERIES_CUTOFF, QuadratureError, SubstitutedGrid, VelocityGrid, bracket,
    direct_I, kappa, kappa_exact, kernel_E0, kernel_E1, substituted_velocity,
    transformed_bracket, transformed_I,
)

H = ModelCase.heavy_tail(2.5)
D = ModelCase.degenerate(0.5)
WG = SubstitutedGrid()


def _full_line(f, breaks=(0, 1, 100, 1e4, 1e6, np.inf)):
    return 2 * sum(quad(f, a, b, limit=500)[0] for a, b in zip(breaks[:-1], breaks[1:]))


def continuous_I(case, k, eps, dt):
    """Real form of the macro multiplier by adaptive quadrature (even integrand)."""
    a = alpha(case)
    nu0, b = case.nu0, case.beta

    def f(v):
        nu = 1.0 if case.is_heavy_tail else nu0 * v ** (3 + b)
        lam = dt * nu / (eps ** a + dt * nu)
        kv2 = (k * v) ** 2
        den = nu * nu + eps ** 2 * lam * lam * kv2
        return 0.0 if den == 0 else nu * lam * lam * kv2 / den * equilibrium(case, v)

    return eps ** (2 - a) * _full_line(f)


# -- grids and brackets -------------------------------------------------------------

def test_grid_symmetry_and_no_zero_node():
    for g in (VelocityGrid(), SubstitutedGrid(), VelocityGrid(3.0, 10)):
        assert np.array_equal(g.nodes, -g.nodes[::-1])
        assert np.array_equal(g.weights, g.weights[::-1])
        assert not np.any(g.nodes == 0)


@pytest.mark.parametrize("bad", [dict(v_max=0), dict(n_v=7), dict(n_v=0)])
def test_velocity_grid_validation(bad):
    with pytest.raises(QuadratureError):
        VelocityGrid(**bad)


@pytest.mark.parametrize("bad", [dict(w_max=1e-12), dict(n_w=3), dict(w_min=0.0)])
def test_substituted_grid_validation(bad):
    with pytest.raises(QuadratureError):
        SubstitutedGrid(**bad)


def test_bracket_examples():
    g = VelocityGrid()
    assert bracket(lambda v: np.ones_like(v), g) == pytest.approx(10.0, rel=1e-14)
    assert bracket(lambda v: v * equilibrium(H, v), g) == 0.0
    fine = VelocityGrid(8.0, 4000)
    assert bracket(lambda v: equilibrium(D, v), fine) == pytest.approx(
        math.erf(8.0 / math.sqrt(2)), rel=1e-10)
    with pytest.raises(QuadratureError):
        bracket(lambda v: np.where(v > 4.9, np.inf, v), g)


@given(st.integers(0, 2 ** 32 - 1))
def test_bracket_odd_cancels_exactly(seed):
    rng = np.random.default_rng(seed)
    g = VelocityGrid(5.0, 64)
    half = rng.normal(size=(3, 32))
    odd = np.concatenate([-half[:, ::-1], half], axis=1)
    assert np.all(bracket(odd, g) == 0.0)


def test_log_grid_integrates_power_singularity():
    # int_{-1}^{1} |w|^(-1/2) dw = 4, which a uniform midpoint rule gets only to O(h^1/2)
    g = SubstitutedGrid(1.0, 800, 1e-14)
    assert bracket(np.abs(g.nodes) ** -0.5, g) == pytest.approx(4.0, rel=1e-4)


# -- kappa ---------------------------------------------------------------------------

def test_kappa_exact_closed_forms_against_quadrature():
    ref = H.m * _full_line(lambda w: w ** (2 - H.beta) / (1 + w * w))
    assert kappa_exact(H) == pytest.approx(ref, rel=1e-8)
    assert kappa_exact(H) == pytest.approx(1.6812, abs=5e-5)
    p = 2 / (2 + D.beta)
    ref = D.m / (2 + D.beta) * _full_line(lambda w: w ** (-p) / (1 + w * w))
    assert kappa_exact(D) == pytest.approx(ref, rel=1e-7)


def test_kappa_defaults_close_to_exact(case):
    assert kappa(case, WG) == pytest.approx(kappa_exact(case), rel=1e-2)


def test_kappa_mirror_invariance(case):
    g = WG
    w = g.nodes
    vals = equilibrium(H, w) * np.abs(w) ** 0.5
    assert bracket(vals, g) == bracket(vals[::-1], g)


def test_kappa_doubling_within_tail_bound():
    g = WG
    change = abs(kappa(H, g.doubled()) - kappa(H, g))
    assert change <= 2 * H.m * g.w_max ** (1 - H.beta) / (H.beta - 1)


@given(st.floats(1.2, 2.8))
def test_kappa_error_within_tail_bound_for_other_betas(beta):
    c = ModelCase.heavy_tail(beta)
    g = SubstitutedGrid(1e4, 2000)
    # mass lost beyond w_max plus mass lost below w_min
    tail = 2 * c.m * (g.w_max ** (1 - beta) / (beta - 1) + g.w_min ** (3 - beta) / (3 - beta))
    assert 0 < kappa(c, g) <= kappa_exact(c)
    assert kappa_exact(c) - kappa(c, g) <= tail + 1e-3 * kappa_exact(c)


def test_degenerate_kappa_is_limit_of_multiplier():
    ks = np.pi * np.array([1.0, 2.0])
    for k in ks:
        ratio = transformed_I(D, k, 1e-14, 1e-3, WG) / (kappa(D, WG) * k ** D.alpha)
        assert ratio == pytest.approx(1.0, rel=2e-3)


# -- substitution --------------------------------------------------------------------

def test_substituted_velocity_inverts_map():
    eps_k = 3e-4
    v, jac = substituted_velocity(D, eps_k, WG)
    nu = D.nu0 * np.abs(v) ** (3 + D.beta)
    np.testing.assert_allclose(eps_k * v / nu, WG.nodes, rtol=1e-12)
    # Jacobian against a centred difference in w
    i = 500
    h = 1e-6 * WG.nodes[i]
    vp, _ = substituted_velocity(D, eps_k, SubstitutedGrid(WG.w_max, WG.n_w, WG.w_min))
    dv = (np.sign(WG.nodes[i] + h) * (eps_k / abs(WG.nodes[i] + h)) ** (1 / 2.5)
          - np.sign(WG.nodes[i] - h) * (eps_k / abs(WG.nodes[i] - h)) ** (1 / 2.5)) / (2 * h)
    assert jac[i] == pytest.approx(abs(dv), rel=1e-6)
    v1, j1 = substituted_velocity(H, 0.5, WG)
    np.testing.assert_allclose(v1, WG.nodes / 0.5)
    assert np.all(j1 == 2.0)


# -- macro multiplier ------------------------------------------------------------------

def test_multiplier_zero_mode(case):
    assert transformed_I(case, 0.0, 0.1, 1e-3, WG) == 0.0


@pytest.mark.filterwarnings("ignore:overflow encountered")
@given(st.floats(-60, 60), st.floats(-10, 0), st.floats(-5, -1))
def test_multiplier_even_and_nonnegative(k, log_eps, log_dt):
    eps, dt = 10 ** log_eps, 10 ** log_dt
    for c in (H, D):
        a = transformed_I(c, k, eps, dt, WG)
        assert a >= 0
        assert a == transformed_I(c, -k, eps, dt, WG)


@pytest.mark.parametrize("eps,dt,k", [(1.0, 1e-3, np.pi), (1.0, 1e-2, 4 * np.pi), (0.1, 1e-3, np.pi)])
def test_heavy_tail_multiplier_matches_adaptive_quadrature(eps, dt, k):
    assert transformed_I(H, k, eps, dt, WG) == pytest.approx(continuous_I(H, k, eps, dt), rel=1e-2)


@pytest.mark.parametrize("eps,dt,k", [(1.0, 1e-3, np.pi), (1e-2, 1e-3, 2 * np.pi)])
def test_degenerate_multiplier_matches_adaptive_quadrature(eps, dt, k):
    assert transformed_I(D, k, eps, dt, WG) == pytest.approx(continuous_I(D, k, eps, dt), rel=1e-2)


def test_plain_quadrature_loses_the_tail():
    # a rectangle rule on [-5, 5] misses most of the heavy-tail contribution at eps = 1
    plain = direct_I(H, np.pi, 1.0, 1e-3, VelocityGrid())
    assert plain < 0.1 * transformed_I(H, np.pi, 1.0, 1e-3, WG)
    # and collapses as eps -> 0 instead of tending to kappa |k|^alpha
    limit = kappa(H, WG) * np.pi ** 1.5
    assert direct_I(H, np.pi, 1e-8, 1e-3, VelocityGrid()) < 1e-3 * limit


def test_complex_form_matches_real_form(case):
    g = VelocityGrid(5.0, 400)
    for k in (np.pi, -3 * np.pi):
        z = direct_I(case, k, 0.3, 1e-2, g, complex_form=True)
        assert abs(z.imag) < 1e-14 * abs(z)
        assert z.real == pytest.approx(direct_I(case, k, 0.3, 1e-2, g), rel=1e-12)


def test_heavy_tail_symbol_recovery():
    ks = np.pi * np.array([1, 2, 4, 8, 16.0])
    vals = np.array([transformed_I(H, k, 1e-8, 1e-3, WG) for k in ks])
    slope = np.polyfit(np.log(ks), np.log(vals), 1)[0]
    assert slope == pytest.approx(1.5, abs=0.02)
    np.testing.assert_allclose(vals[:3] / (kappa(H, WG) * ks[:3] ** 1.5), 1.0, rtol=1e-3)


def test_degenerate_symbol_slope():
    ks = np.pi * np.array([1, 2, 4, 8, 16.0])
    vals = np.array([transformed_I(D, k, 1e-8, 1e-3, WG) for k in ks])
    slope = np.polyfit(np.log(ks), np.log(vals), 1)[0]
    assert slope == pytest.approx(1.8, abs=0.05)


def test_degenerate_multiplier_eps_independence():
    # stated tolerance: 1e-3 between eps = 1e-8 and 1e-10 at every mode
    for k in np.pi * np.array([1, 2, 4, 8, 16.0]):
        a = transformed_I(D, k, 1e-8, 1e-3, WG)
        b = transformed_I(D, k, 1e-10, 1e-3, WG)
        assert a == pytest.approx(b, rel=1e-3)


def test_stiff_bracket_power():
    # lam_power = 3 carries one extra factor lambda = dt/(eps^a + dt) in the heavy-tail case
    eps, dt = 0.2, 1e-2
    lam = dt / (eps ** 1.5 + dt)
    assert transformed_bracket(H, np.pi, eps, dt, WG, 3) == pytest.approx(
        lam * transformed_bracket(H, np.pi, eps, dt, WG, 2), rel=1e-13)


# -- kernels ---------------------------------------------------------------------------

def _mp_kernels(a, tau):
    mpmath.mp.dps = 40
    a, tau = mpmath.mpc(a), mpmath.mpf(tau)
    z = a * tau
    e0 = sum((-z) ** n / mpmath.factorial(n + 1) for n in range(30)) * tau
    e1 = sum((n - 1) * (-z) ** (n - 2) / mpmath.factorial(n) for n in range(2, 32)) * tau
    return complex(e0), complex(e1)


def test_kernel_examples():
    assert kernel_E0(0.0, 2.0) == 2.0
    assert kernel_E1(0.0, 2.0) == 1.0
    assert kernel_E0(100.0, 1.0) == pytest.approx(0.01, rel=1e-40 + 1e-15)
    assert kernel_E1(100.0, 1.0) == pytest.approx(1e-4, rel=1e-12)
    a = 1e-8 * (1 + 1j)
    e0, e1 = _mp_kernels(a, 1.0)
    assert abs(kernel_E0(a, 1.0) - e0) <= 1e-12 * abs(e0)
    assert abs(kernel_E1(a, 1.0) - e1) <= 1e-12 * abs(e1)


def test_kernel_errors():
    with pytest.raises(QuadratureError):
        kernel_E0(-1.0, 1.0)
    with pytest.raises(QuadratureError):
        kernel_E1(1.0, 0.0)


@given(st.floats(0, 1e3), st.floats(1e-6, 1e2))
def test_kernel_bounds_real(a, tau):
    e0, e1 = kernel_E0(a, tau), kernel_E1(a, tau)
    assert 0 < e0.real <= tau * (1 + 1e-15)
    assert 0 < e1.real <= tau / 2 * (1 + 1e-15)
    assert e1.real <= e0.real


@given(st.floats(-3, 3), st.floats(0, 2 * np.pi))
def test_kernels_continuous_across_series_switch(log_tau, phase):
    tau = 10 ** log_tau
    r = SERIES_CUTOFF / tau
    a_in = r * (1 - 1e-9) * np.exp(1j * phase / 4)
    a_out = r * (1 + 1e-9) * np.exp(1j * phase / 4)
    for ker in (kernel_E0, kernel_E1):
        lo, hi = ker(a_in, tau), ker(a_out, tau)
        assert abs(lo - hi) <= 1e-11 * abs(hi)


def test_kernels_vectorised():
    a = np.array([0.0, 1e-6, 1.0, 50.0 + 3j])
    np.testing.assert_allclose(kernel_E0(a, 0.5), [kernel_E0(x, 0.5) for x in a])
    np.testing.assert_allclose(kernel_E1(a, 0.5), [kernel_E1(x, 0.5) for x in a])
