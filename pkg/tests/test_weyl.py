"""Quantization, Moyal composition, cutoff conjugation, and parametrix checks."""

import math

import numpy as np
import pytest
import sympy as sp

from torusdamp.grid import GridFunction, make_grid
from torusdamp.profiles import (
    constant_profile,
    polynomial_profile,
    strip_constant_profile,
)
from torusdamp.symbols import (
    X,
    XI,
    InsufficientRegularityError,
    SemiclassicalSymbol,
    even_window,
    symbol_library,
    wrap_angle,
)
from torusdamp.weyl import (
    AliasingError,
    PlateauError,
    commutator_identity_check,
    commutator_identity_residual,
    composition_remainder,
    cutoff_conjugation_error,
    elliptic_estimate_check,
    elliptic_estimate_scan,
    moyal_term_expr,
    parametrix_build,
    parametrix_composition_check,
    quantize,
)
from torusdamp.resolvent import StationaryProblem, assemble, solve

TAU, GAMMA = 0.875, 2

# smooth compact frequency window shared by the coupled-symbol tests
PSI = even_window(XI, 2.0, 3.0)


def band_limited(g, seed, band):
    rng = np.random.Generator(np.random.Philox(seed))
    coef = np.zeros(g.n, dtype=np.complex128)
    mask = np.abs(g.frequencies) <= band
    coef[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    return GridFunction(g, np.fft.ifft(coef) * g.n)


class TestQuantize:
    def test_constant_symbol_is_identity(self):
        g = make_grid(64)
        m = quantize(SemiclassicalSymbol("one", sp.Integer(1), 0.25), g).entries
        np.testing.assert_array_equal(m, np.eye(64))

    def test_x_only_symbol_is_exact_diagonal(self):
        g = make_grid(96)
        s = SemiclassicalSymbol("mult", sp.cos(X) + 0.3 * sp.sin(2 * X), 0.5)
        m = quantize(s, g).entries
        assert np.max(np.abs(m - np.diag(np.diagonal(m)))) == 0.0
        expected = np.cos(g.nodes) + 0.3 * np.sin(2 * g.nodes)
        np.testing.assert_allclose(np.diagonal(m), expected, atol=1e-13)

    def test_xi_symbol_is_fourier_multiplier(self):
        h = 0.2
        g = make_grid(64)
        m = quantize(SemiclassicalSymbol("xi", XI, h), g).entries
        for k in (-5, 0, 3, 11):
            e = np.exp(1j * k * g.nodes)
            np.testing.assert_allclose(m @ e, h * k * e, atol=1e-12)

    def test_real_coupled_symbol_quantizes_hermitian(self):
        g = make_grid(256)
        s = SemiclassicalSymbol("a", sp.sin(X) * PSI, 2.0**-4, xi_decay_bound=3.0)
        m = quantize(s, g).entries
        assert np.max(np.abs(m - m.conj().T)) <= 1e-12

    def test_canonical_commutation_on_localized_data(self):
        # [Op(xt), Op(xi)] u = ih u for data living where xt == x (the smooth
        # periodic extension is exact on |x| <= 1.4) and band-limited enough
        # that the spectral derivative is exact
        n, h = 256, 0.1
        g = make_grid(n)
        xt = SemiclassicalSymbol("xt", X * even_window(X, 1.4, 2.8), h)
        xi = SemiclassicalSymbol("xi", XI, h)
        a = quantize(xt, g).entries
        b = quantize(xi, g).entries
        u = np.exp(-12.0 * wrap_angle(g.nodes) ** 2)
        lhs = (a @ b - b @ a) @ u
        err = np.linalg.norm(lhs - 1j * h * u) / np.linalg.norm(h * u)
        assert err <= 1e-10

    def test_coupled_symbol_alive_at_nyquist_is_rejected(self):
        # n = 64 at h = 2^-5 puts the Nyquist frequency at xi = 1, inside PSI
        s = SemiclassicalSymbol("a", sp.sin(X) * PSI, 2.0**-5, xi_decay_bound=3.0)
        with pytest.raises(AliasingError):
            quantize(s, make_grid(64))


class TestMoyalTerms:
    def test_zeroth_term_is_pointwise_product(self):
        a, b = sp.sin(X) * PSI, sp.cos(X) * PSI
        assert sp.simplify(moyal_term_expr(a, b, 0) - a * b) == 0

    def test_first_term_antisymmetric(self):
        a, b = sp.sin(X) * PSI, XI * PSI
        t_ab = moyal_term_expr(a, b, 1)
        t_ba = moyal_term_expr(b, a, 1)
        assert sp.simplify(t_ab + t_ba) == 0
        assert sp.simplify(moyal_term_expr(a, a, 1)) == 0

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            moyal_term_expr(X, XI, -1)


class TestCompositionRemainder:
    HS = [2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6]

    def test_xi_only_pair_composes_exactly(self):
        a = SemiclassicalSymbol("za", even_window(XI, 1.0, 2.0), 0.5, xi_decay_bound=2.0)
        b = SemiclassicalSymbol("zb", even_window(XI, 0.5, 1.5), 0.5, xi_decay_bound=1.5)
        r = composition_remainder(a, b, 2, self.HS)
        assert max(r.norms) <= 1e-12
        assert math.isinf(r.fitted_slope)

    def test_x_only_pair_composes_exactly(self):
        a = SemiclassicalSymbol("fa", sp.sin(X), 0.5)
        b = SemiclassicalSymbol("fb", sp.cos(2 * X), 0.5)
        r = composition_remainder(a, b, 2, self.HS)
        assert max(r.norms) <= 1e-12

    @pytest.mark.parametrize("n_terms", [1, 2])
    def test_coupled_pair_remainder_slope(self, n_terms):
        a = SemiclassicalSymbol("a", sp.sin(X) * PSI, 0.5, xi_decay_bound=3.0)
        b = SemiclassicalSymbol("b", sp.cos(X) * PSI, 0.5, xi_decay_bound=3.0)
        r = composition_remainder(a, b, n_terms, self.HS)
        assert r.fitted_slope >= n_terms - 0.3
        assert r.decreasing
        assert r.predicted_slope == pytest.approx(n_terms)

    def test_short_h_list_rejected(self):
        a = SemiclassicalSymbol("a", PSI, 0.5, xi_decay_bound=3.0)
        with pytest.raises(ValueError):
            composition_remainder(a, a, 1, [0.5, 0.25, 0.125])
        with pytest.raises(ValueError):
            composition_remainder(a, a, 1, [0.5, 0.5, 0.25, 0.125])


class TestCutoffConjugation:
    HS = [2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6]

    @staticmethod
    def _bump():
        return SemiclassicalSymbol(
            "b",
            even_window(X, 0.3, 1.2) * even_window(XI, 0.8, 1.5),
            0.5,
            xi_decay_bound=1.5,
            support_hint=((-1.2, 1.2), (-1.5, 1.5)),
        )

    def test_flat_cutoff_error_superpolynomial(self):
        t = SemiclassicalSymbol("t", even_window(XI, 3.0, 3.5), 0.5, xi_decay_bound=3.5)
        r = cutoff_conjugation_error(t, self._bump(), self.HS)
        # smooth disjoint-support data: already below 1e-8 at h = 2^-5
        assert r.norms[2] < 1e-8
        assert all(b < a for a, b in zip(r.norms, r.norms[1:]))
        assert math.isinf(r.predicted_slope)

    def test_unit_cutoff_error_is_exactly_zero(self):
        one = SemiclassicalSymbol("one", sp.Integer(1), 0.5)
        r = cutoff_conjugation_error(one, self._bump(), self.HS)
        assert r.norms == (0.0, 0.0, 0.0, 0.0)

    def test_plateau_violation_rejected(self):
        narrow = SemiclassicalSymbol(
            "t", even_window(XI, 0.5, 0.9), 0.5, xi_decay_bound=0.9
        )
        with pytest.raises(PlateauError):
            cutoff_conjugation_error(narrow, self._bump(), self.HS)

    def test_missing_support_hint_rejected(self):
        t = SemiclassicalSymbol("t", even_window(XI, 3.0, 3.5), 0.5, xi_decay_bound=3.5)
        bare = SemiclassicalSymbol(
            "b", even_window(XI, 0.8, 1.5), 0.5, xi_decay_bound=1.5
        )
        with pytest.raises(PlateauError):
            cutoff_conjugation_error(t, bare, self.HS)


class TestCommutatorIdentity:
    def test_solved_instances_at_rounding_level(self):
        g = make_grid(256)
        cases = [
            (strip_constant_profile(1.0), 2.0**-3, 0.875, 2, 1.0),
            (strip_constant_profile(1.0, 0.25), 2.0**-4, 0.75, 1, 0.3),
            (polynomial_profile(1.0, 2), 2.0**-5, 0.95, 2, 1.7),
            (constant_profile(1.5), 2.0**-2, 0.6, 1, 0.0),
        ]
        for i, (profile, h, tau, gamma, beta) in enumerate(cases):
            f = band_limited(g, 100 + i, g.n // 4)
            res = commutator_identity_check(profile, h, tau, gamma, beta, f, g)
            assert res <= 1e-10, (profile.name, res)

    def test_strip_reference_case(self):
        g = make_grid(256)
        f = band_limited(g, 5, 64)
        res = commutator_identity_check(strip_constant_profile(1.0), 0.05, 0.875, 2, 1.0, f, g)
        assert res <= 1e-10

    def test_non_solution_fails_loudly(self):
        g = make_grid(128)
        f = band_limited(g, 6, 32)
        u = band_limited(g, 7, 32)  # not a solution for f
        res = commutator_identity_residual(
            strip_constant_profile(1.0), 0.1, 0.875, 2, 1.0, u, f, g
        )
        assert res > 1e-3

    def test_bad_gamma_rejected(self):
        g = make_grid(64)
        f = band_limited(g, 8, 16)
        with pytest.raises(ValueError):
            commutator_identity_check(constant_profile(1.0), 0.1, 0.875, 3, 0.0, f, g)


class TestParametrix:
    def test_leading_symbol_closed_form(self):
        # on the z == 1 annulus at a point with W == 0 the leading symbol is
        # h^(2-2 tau) / (xi^2 - h^2 beta)
        h, beta = 2.0**-4, 1.0
        q0 = parametrix_build(strip_constant_profile(1.0), h, TAU, GAMMA, beta, 0)[0]
        got = complex(q0(0.0, 2.0))
        expected = h ** (2.0 - 2.0 * TAU) / (4.0 - h * h * beta)
        assert abs(got - expected) <= 1e-12 * abs(expected)

    def test_leading_symbol_vanishes_in_dead_zone(self):
        q0 = parametrix_build(strip_constant_profile(1.0), 2.0**-4, TAU, GAMMA, 1.0, 0)[0]
        assert complex(q0(0.0, 0.1)) == 0.0

    def test_ellipticity_hypothesis_enforced(self):
        with pytest.raises(ValueError, match="hypothesis"):
            parametrix_build(constant_profile(1.0), 0.5, TAU, GAMMA, 10.0, 0)

    def test_regularity_guard(self):
        sharp = strip_constant_profile(1.0)  # W derivatives stop at order 0
        with pytest.raises(InsufficientRegularityError):
            parametrix_build(sharp, 2.0**-4, TAU, GAMMA, 1.0, 1)

    def test_undamped_parametrix_reproduces_z_exactly(self):
        # W == 0 makes p a pure frequency multiplier; the single-term
        # parametrix inverts it exactly on the support of z
        hs = [2.0**-4, 2.0**-5, 2.0**-6, 2.0**-7]
        r = parametrix_composition_check(constant_profile(0.0), hs, TAU, GAMMA, 0.5, 0)
        assert max(r.norms) <= 1e-11

    def test_more_terms_do_not_hurt(self, parametrix_j3_remainder):
        # the j_max = 3 expansion only beats the bare inverse once h is small
        # enough for the h^(2 tau - 1) gain per term to pay for its constants;
        # at h = 2^-7 it does, and its normalized remainder shrinks with h
        r3 = parametrix_j3_remainder
        r0 = parametrix_composition_check(
            polynomial_profile(1.0, 2), list(r3.h_values), TAU, GAMMA, 0.5, 0
        )
        assert r3.norms[-1] <= r0.norms[-1]
        assert all(b < a for a, b in zip(r3.norms, r3.norms[1:]))


class TestEllipticEstimates:
    def test_fully_damped_constants_moderate(self):
        g = make_grid(256)
        f = band_limited(g, 9, 64)
        rep = elliptic_estimate_check(constant_profile(1.0), 2.0**-4, TAU, GAMMA, 0.5, f)
        assert 0.0 < rep.c_strong < 1.0
        assert 0.0 < rep.c_weak < 1.0
        assert rep.c_strong_full <= rep.c_strong

    def test_low_frequency_forcing_misses_z(self):
        # constant damping keeps the solve Fourier-diagonal, so a mode-1
        # forcing produces a mode-1 solution on which z vanishes identically
        g = make_grid(256)
        f = GridFunction(g, np.exp(1j * g.nodes))
        rep = elliptic_estimate_check(constant_profile(1.0), 2.0**-4, TAU, GAMMA, 0.1, f)
        assert rep.z_residual_norm <= 1e-14 * rep.u_norm

    def test_hypothesis_violation_rejected(self):
        g = make_grid(64)
        f = GridFunction(g, np.exp(1j * g.nodes))
        with pytest.raises(ValueError, match="hypothesis"):
            elliptic_estimate_check(constant_profile(1.0), 0.5, TAU, GAMMA, 10.0, f)

    def test_strip_constants_stable_across_h(self):
        scan = elliptic_estimate_scan(
            strip_constant_profile(1.0),
            [2.0**-4, 2.0**-5, 2.0**-6, 2.0**-7],
            TAU,
            GAMMA,
            0.5,
        )
        assert scan.stable
        assert scan.c_strong_ratio < 2.0
        assert scan.c_weak_ratio < 2.0
