import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusdamp.grid import (
    GridFunction,
    derivative,
    l2_inner,
    l2_norm,
    make_grid,
    resample,
    sample,
    sobolev_norm,
)

TWO_PI = 2.0 * math.pi


def test_make_grid_nodes():
    g = make_grid(8)
    assert np.allclose(g.nodes, np.arange(8) * (math.pi / 4.0))
    assert g.spacing == pytest.approx(math.pi / 4.0)


def test_make_grid_rejects_odd_and_small():
    with pytest.raises(ValueError):
        make_grid(7)
    with pytest.raises(ValueError):
        make_grid(6)


def test_make_grid_frequencies_512():
    g = make_grid(512)
    assert g.frequencies.min() == -256
    assert g.frequencies.max() == 255
    assert len(set(g.frequencies.tolist())) == 512


def test_sample_constant():
    g = make_grid(8)
    u = sample(lambda x: np.ones_like(x), g)
    assert np.allclose(u.values, 1.0)


def test_sample_sin_exact_nodes():
    g = make_grid(8)
    u = sample(np.sin, g)
    r = math.sqrt(2.0) / 2.0
    expected = [0.0, r, 1.0, r, 0.0, -r, -1.0, -r]
    assert np.allclose(u.values, expected, atol=1e-15)


def test_sample_pure_frequency():
    g = make_grid(16)
    u = sample(lambda x: np.exp(3j * x), g)
    assert np.max(np.abs(u.values - np.exp(3j * g.nodes))) < 1e-14


def test_grid_function_length_mismatch():
    g = make_grid(8)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(9, dtype=np.complex128))


def test_derivative_sin_is_cos():
    g = make_grid(64)
    du = derivative(sample(np.sin, g))
    assert np.max(np.abs(du.values - np.cos(g.nodes))) < 1e-12


def test_second_derivative_pure_mode():
    g = make_grid(64)
    u = sample(lambda x: np.exp(3j * x), g)
    d2 = derivative(u, 2)
    assert np.max(np.abs(d2.values + 9.0 * u.values)) / 9.0 < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=15), st.data())
def test_derivative_matches_interpolant(seed, data):
    # random trig polynomial of degree <= n/4: the spectral derivative must
    # equal the analytic derivative of the interpolant
    g = make_grid(64)
    rng = np.random.Generator(np.random.Philox(seed))
    deg = data.draw(st.integers(min_value=1, max_value=16))
    ks = np.arange(-deg, deg + 1)
    coef = rng.standard_normal(len(ks)) + 1j * rng.standard_normal(len(ks))
    vals = sum(c * np.exp(1j * k * g.nodes) for c, k in zip(coef, ks))
    dvals = sum(1j * k * c * np.exp(1j * k * g.nodes) for c, k in zip(coef, ks))
    du = derivative(GridFunction(g, vals))
    scale = max(np.max(np.abs(dvals)), 1.0)
    assert np.max(np.abs(du.values - dvals)) / scale < 1e-12


def test_derivative_composes_on_bandlimited_data():
    g = make_grid(32)
    rng = np.random.Generator(np.random.Philox(5))
    coef = np.zeros(32, dtype=np.complex128)
    coef[:10] = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    coef[-10:] = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    u = GridFunction(g, np.fft.ifft(coef) * 32)
    once_twice = derivative(derivative(u, 1), 1)
    direct = derivative(u, 2)
    assert np.max(np.abs(once_twice.values - direct.values)) < 1e-11


def test_l2_inner_constants():
    g = make_grid(32)
    one = sample(lambda x: np.ones_like(x), g)
    assert l2_inner(one, one) == pytest.approx(TWO_PI)


def test_l2_inner_orthogonality():
    g = make_grid(32)
    assert abs(l2_inner(sample(np.sin, g), sample(np.cos, g))) < 1e-14


def test_l2_inner_pure_mode():
    g = make_grid(32)
    e1 = sample(lambda x: np.exp(1j * x), g)
    assert l2_inner(e1, e1) == pytest.approx(TWO_PI)


def test_l2_inner_grid_mismatch():
    u = sample(np.sin, make_grid(16))
    v = sample(np.sin, make_grid(32))
    with pytest.raises(ValueError):
        l2_inner(u, v)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10))
def test_parseval(seed):
    g = make_grid(64)
    rng = np.random.Generator(np.random.Philox(seed + 100))
    vals = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    u = GridFunction(g, vals)
    uhat = np.fft.fft(vals) / 64
    lhs = l2_inner(u, u).real
    rhs = TWO_PI * np.sum(np.abs(uhat) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert lhs >= 0
    assert math.sqrt(lhs) == pytest.approx(sobolev_norm(u, 0.0), rel=1e-12)


def test_sobolev_norm_constant():
    g = make_grid(32)
    one = sample(lambda x: np.ones_like(x), g)
    assert sobolev_norm(one, 2.0) == pytest.approx(math.sqrt(TWO_PI))


def test_sobolev_norm_pure_mode():
    g = make_grid(32)
    u = sample(lambda x: np.exp(3j * x), g)
    assert sobolev_norm(u, 1.0) == pytest.approx(math.sqrt(TWO_PI * 10.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10))
def test_sobolev_norm_matches_direct_sum(seed):
    g = make_grid(64)
    rng = np.random.Generator(np.random.Philox(seed + 200))
    vals = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    u = GridFunction(g, vals)
    uhat = np.fft.fft(vals) / 64
    k = g.frequencies.astype(float)
    s = 1.5
    direct = math.sqrt(TWO_PI * float(np.sum((1 + k * k) ** s * np.abs(uhat) ** 2)))
    assert sobolev_norm(u, s) == pytest.approx(direct, rel=1e-12)


def test_resample_is_exact_on_trig_polynomials():
    g = make_grid(16)
    u = sample(lambda x: np.exp(3j * x) + 2.0 * np.cos(5 * x), g)
    fine = make_grid(64)
    uf = resample(u, fine)
    expected = np.exp(3j * fine.nodes) + 2.0 * np.cos(5 * fine.nodes)
    assert np.max(np.abs(uf.values - expected)) < 1e-12


def test_resample_same_grid_and_coarser():
    g = make_grid(16)
    u = sample(np.sin, g)
    same = resample(u, make_grid(16))
    assert np.allclose(same.values, u.values)
    with pytest.raises(ValueError):
        resample(u, make_grid(8))


def test_l2_norm_matches_inner():
    g = make_grid(32)
    u = sample(lambda x: np.exp(2j * x) * 3.0, g)
    assert l2_norm(u) == pytest.approx(math.sqrt(l2_inner(u, u).real), rel=1e-14)
