import math

import numpy as np
import pytest
import sympy as sp

from torusdamp.symbols import (
    H,
    X,
    XI,
    InsufficientRegularityError,
    SemiclassicalSymbol,
    even_window,
    falling_step,
    rising_step,
    smooth_step,
    symbol_library,
)


def test_smooth_step_plateaus():
    t = sp.Symbol("t", real=True)
    step = smooth_step(t)
    f = sp.lambdify(t, step, "numpy")
    with np.errstate(all="ignore"):  # exp(-1/t) branches guard the division
        vals = f(np.array([-0.5, 0.0, 1.0, 2.0]))
        mid = f(np.linspace(0.05, 0.95, 19))
    assert np.allclose(vals, [0.0, 0.0, 1.0, 1.0], atol=0.0)
    assert np.all((mid > 0) & (mid < 1))
    assert np.all(np.diff(mid) > 0)


def test_step_argument_validation():
    with pytest.raises(ValueError):
        rising_step(X, 1.0, 1.0)
    with pytest.raises(ValueError):
        falling_step(X, 2.0, 1.0)


def test_even_window_geometry():
    w = even_window(X, 1.0, 2.0)
    f = sp.lambdify(X, w, "numpy")
    assert f(0.0) == 1.0
    assert f(0.999) == 1.0
    assert f(-0.5) == 1.0
    assert f(2.0) == 0.0
    assert f(-3.0) == 0.0
    assert 0.0 < f(1.5) < 1.0


class TestLibraryGeometry:
    """Plateau levels are exact by construction; probe them directly."""

    def test_z_vanishes_inside_scaled_plateau(self):
        h, tau = 0.1, 0.875
        z = symbol_library("z", h, tau)
        # z1 kills |h^(tau-1) xi| < 1.25, i.e. |xi| < 1.25 h^(1-tau)
        xi = 1.2 * h ** (1.0 - tau) * 0.4 * 3.0 / 3.0
        assert abs(z(0.3, xi)) == 0.0

    def test_z_equals_one_on_annulus(self):
        h, tau = 0.1, 0.875
        z = symbol_library("z", h, tau)
        # above the z1 rise but inside the z2 plateau
        xi = 1.6 * h ** (1.0 - tau)
        if xi < 2.0:
            assert z(1.0, xi) == pytest.approx(1.0, abs=1e-15)

    def test_z_compactly_supported(self):
        z = symbol_library("z", 0.1, 0.875)
        assert abs(z(0.0, 3.5)) == 0.0
        assert z.xi_decay_bound == pytest.approx(3.0)

    def test_z_tilde_levels(self):
        zt = symbol_library("z_tilde", 0.1, 0.875)
        assert abs(zt(0.0, 0.9)) == 0.0
        assert zt(0.0, 1.6) == pytest.approx(1.0, abs=1e-15)
        assert zt(0.0, 100.0) == pytest.approx(1.0, abs=1e-15)

    def test_chi_plateaus(self):
        chi = symbol_library("chi", 0.1, 0.875, {"sigma": 1.0, "sigma1": 0.5})
        assert chi(1.0 + 0.125, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert abs(chi(1.0 + 1.0, 0.0)) == 0.0

    def test_psi_plateau_at_scaled_frequency(self):
        h, tau = 0.05, 0.875
        psi = symbol_library("psi", h, tau)
        assert psi(0.0, h ** (1.0 - tau)) == pytest.approx(1.0, abs=1e-15)
        assert abs(psi(0.0, 4.0 * h ** (1.0 - tau))) == 0.0

    def test_escape_symbol_structure(self):
        h, tau = 0.1, 0.875
        a = symbol_library("a", h, tau, {"sigma": 1.0, "sigma1": 0.5})
        assert a.is_real
        # vanishes outside the chi support in x
        assert abs(a(2.0, h ** (1.0 - tau))) == 0.0
        # odd in x alone, hence even under the joint sign flip
        xi = 1.5 * h ** (1.0 - tau)
        assert a(-0.5, xi) == pytest.approx(-a(0.5, xi), rel=1e-12)
        assert a(-0.5, -xi) == pytest.approx(a(0.5, xi), rel=1e-12)

    def test_s_symbol_levels(self):
        s = symbol_library("s", 0.1, 0.875, {"sigma": 1.0, "sigma1": 0.5})
        assert abs(s(0.5, 0.0)) == 0.0
        assert s(1.3, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert s(math.pi, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_b_multiplier_shape(self):
        sigma, eps1 = 1.0, 0.2
        b = symbol_library("b_eps1", 0.5, 0.75, {"sigma": sigma, "eps1": eps1})
        half_period = 2.0 * (sigma + eps1)
        # pure cosine on the inner region
        for x in (0.0, 0.5, sigma + eps1 / 4.0):
            assert b(x, 0.0) == pytest.approx(math.cos(math.pi * x / half_period), rel=1e-12)
        # vanishes beyond the mask, nonnegative everywhere
        assert abs(b(sigma + eps1 + 0.05, 0.0)) == 0.0
        xs = np.linspace(-math.pi, math.pi, 400)
        assert np.min(b(xs, 0.0).real) >= -1e-15

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            symbol_library("mystery", 0.1, 0.875)


@pytest.mark.parametrize("name", ["z", "chi", "psi", "a", "b_eps1"])
def test_derivative_samplers_match_finite_differences(name):
    h, tau = 0.1, 0.875
    sym = symbol_library(name, h, tau, {"sigma": 1.0, "sigma1": 0.5, "eps1": 0.2})
    rng = np.random.Generator(np.random.Philox(7))
    xs = rng.uniform(-2.5, 2.5, size=12)
    xis = rng.uniform(-2.5, 2.5, size=12)
    eps = 1e-6
    dx_exact = sym(xs, xis, dx=1)
    dx_fd = (sym(xs + eps, xis) - sym(xs - eps, xis)) / (2 * eps)
    dxi_exact = sym(xs, xis, dxi=1)
    dxi_fd = (sym(xs, xis + eps) - sym(xs, xis - eps)) / (2 * eps)
    scale = max(np.max(np.abs(dx_exact)), np.max(np.abs(dxi_exact)), 1.0)
    assert np.max(np.abs(dx_exact - dx_fd)) / scale < 1e-5
    assert np.max(np.abs(dxi_exact - dxi_fd)) / scale < 1e-5


def test_symbol_parameter_validation():
    with pytest.raises(ValueError):
        SemiclassicalSymbol("b", XI, h=0.0)
    with pytest.raises(ValueError):
        SemiclassicalSymbol("b", XI, h=0.5, tau=0.5)
    with pytest.raises(ValueError):
        SemiclassicalSymbol("b", XI, h=0.5, gamma=3)


def test_max_order_guard():
    sym = SemiclassicalSymbol("b", XI**2, h=0.5, max_order=2)
    sym(0.0, 1.0, dxi=2)
    with pytest.raises(InsufficientRegularityError):
        sym(0.0, 1.0, dxi=3)


def test_with_h_rescales_xi_bound():
    tau = 0.875
    psi = symbol_library("psi", 0.1, tau)
    finer = psi.with_h(0.05)
    assert finer.h == pytest.approx(0.05)
    assert finer.xi_decay_bound == pytest.approx(3.0 * 0.05 ** (1.0 - tau))


def test_h_aware_expression_evaluation():
    sym = SemiclassicalSymbol("hx", H * X, h=0.25)
    assert sym(2.0, 0.0) == pytest.approx(0.5)
