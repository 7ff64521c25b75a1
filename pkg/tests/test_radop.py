import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from radstefan import _kernels_py
from radstefan._backend import kernels
from radstefan.radop import (
    RadField,
    apply_radiation,
    apply_radiation_truncated,
    build_rad_weights,
    half_line_mass,
)
from radstefan.specfun import exp_integral_e1


def unit_temperature_oracle(y, alpha):
    z = alpha * np.asarray(y, dtype=float)
    e1z = np.zeros_like(z)
    e1z[z > 0] = exp_integral_e1(z[z > 0])
    return 0.5 * (np.exp(-z) - z * e1z)


def smooth_temperature(x):
    return 1.0 + 0.5 * np.exp(-x) * np.cos(2 * x)


def quad_radiation(y, alpha, R, temp):
    kern = lambda e: 0.5 * alpha * exp_integral_e1(alpha * abs(y - e)) * temp(e) ** 4 if e != y else 0.0
    left = integrate.quad(kern, 0, y, limit=400, epsabs=1e-14)[0] if y > 0 else 0.0
    right = integrate.quad(kern, y, R, limit=400, epsabs=1e-14)[0]
    return temp(y) ** 4 - left - right


def test_weights_nonnegative_and_row_sums():
    g = np.linspace(0, 10, 201)
    w = build_rad_weights(g, 1.0)
    assert np.all(w.weights >= 0)
    rows = w.row_sums()
    assert np.all((rows > 0) & (rows < 1))
    mass = half_line_mass(g, 1.0) - w.tail
    assert np.allclose(rows, mass, atol=1e-12)


def test_two_point_grid_cell_moments():
    h = 0.8
    w = build_rad_weights(np.array([0.0, h]), 1.0)
    k = lambda e: 0.5 * exp_integral_e1(e) if e > 0 else 0.0
    w00 = integrate.quad(lambda e: k(e) * (h - e) / h, 0, h, epsabs=1e-15)[0]
    w01 = integrate.quad(lambda e: k(e) * e / h, 0, h, epsabs=1e-15)[0]
    assert w.weights[0, 0] == pytest.approx(w00, abs=1e-13)
    assert w.weights[0, 1] == pytest.approx(w01, abs=1e-13)
    assert w.weights[1, 1] == pytest.approx(w00, abs=1e-13)
    assert w.weights[1, 0] == pytest.approx(w01, abs=1e-13)


def test_fallback_weights_agree():
    g = np.concatenate([np.linspace(0, 1, 30), np.linspace(1.1, 6, 25)])
    a = kernels.e1_hat_weights(g, 1.7, 30.0)
    b = _kernels_py.e1_hat_weights(g, 1.7, 30.0)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=0, atol=1e-12)


def test_grid_and_alpha_errors():
    with pytest.raises(ValueError):
        build_rad_weights(np.array([0.0, 1.0, 0.5]), 1.0)
    with pytest.raises(ValueError):
        build_rad_weights(np.linspace(0, 1, 5), 0.0)
    w = build_rad_weights(np.linspace(0, 1, 5), 1.0)
    with pytest.raises(ValueError):
        apply_radiation(RadField(np.linspace(0, 2, 5), np.zeros(5)), w, 1.0)
    with pytest.raises(ValueError):
        apply_radiation_truncated(np.zeros(5), w, 1.0, 0.5)


def test_zero_temperature_gives_zero():
    g = np.linspace(0, 5, 51)
    w = build_rad_weights(g, 2.0)
    assert np.all(apply_radiation(np.full(51, -1.0), w, 1.0) == 0)
    assert np.all(apply_radiation_truncated(np.zeros(51), w, 0.0, 5.0) == 0)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 4.0])
def test_unit_temperature_closed_form(alpha):
    g = np.linspace(0, 12, 601)
    w = build_rad_weights(g, alpha)
    I = apply_radiation(np.zeros_like(g), w, 1.0)
    assert I[0] == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(I, unit_temperature_oracle(g, alpha), atol=1e-11)
    resolved = unit_temperature_oracle(g, alpha) > 1e-9
    assert np.all(np.diff(I[resolved]) < 0)


def test_truncated_matches_full_when_support_is_compact():
    g = np.linspace(0, 40, 801)
    u = np.where(g < 3, -np.sin(np.pi * g / 3) ** 2, 0.0) - 1.0  # T = 0 beyond 3
    w = build_rad_weights(g, 2.0)
    full = apply_radiation(u, w, 1.0)
    trunc = apply_radiation_truncated(u, w, 1.0, 40.0)
    assert np.allclose(full, trunc, atol=1e-10)


def test_truncated_interior_loses_only_exterior_mass():
    R = 6.0
    g = np.linspace(0, R, 121)
    w = build_rad_weights(g, 8.0)
    I = apply_radiation_truncated(np.zeros_like(g), w, 1.0, R)
    mid = I[60]
    assert 0 < mid < 1e-12 + 2 * 0.5 * (np.exp(-8 * 3) - 8 * 3 * exp_integral_e1(8 * 3))


def test_truncated_grid_short_of_R_uses_constant_extension():
    R = 5.0
    w_short = build_rad_weights(np.linspace(0, 4, 81), 1.0)
    w_full = build_rad_weights(np.linspace(0, 5, 101), 1.0)
    a = apply_radiation_truncated(np.zeros(81), w_short, 1.0, R)
    b = apply_radiation_truncated(np.zeros(101), w_full, 1.0, R)
    assert np.allclose(a, b[:81], atol=1e-12)


def test_smooth_field_second_order():
    alpha, R = 1.3, 12.0
    ys = np.array([0.0, 1.0, 2.0, 3.0, 6.0])
    ref = np.array([quad_radiation(y, alpha, R, smooth_temperature) for y in ys])
    errs = []
    for n in (120, 240, 480):
        g = np.linspace(0, R, n + 1)
        w = build_rad_weights(g, alpha)
        I = apply_radiation_truncated(smooth_temperature(g) - 1.0, w, 1.0, R)
        idx = np.searchsorted(g, ys)
        errs.append(np.abs(I[idx] - ref).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.round(orders, 1) >= 2.0)


def test_interior_maximum_gives_positive_radiation():
    g = np.linspace(0, 8, 161)
    w = build_rad_weights(g, 1.0)
    u = 0.3 * np.exp(-(g - 4) ** 2) - 0.5
    I = apply_radiation_truncated(u, w, 1.0, 8.0)
    assert I[np.argmax(u)] > 0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 1.5), st.floats(0, 1.0), st.integers(0, 2**31 - 1))
def test_lipschitz_bound(T_M, C, seed):
    rng = np.random.default_rng(seed)
    g = np.linspace(0, 6, 61)
    w = build_rad_weights(g, 1.0)
    u = C * rng.uniform(-1, 1, g.size)
    v = C * rng.uniform(-1, 1, g.size)
    du = np.abs(apply_radiation(u, w, T_M) - apply_radiation(v, w, T_M)).max()
    bound = 32 * (max(abs(u).max(), abs(v).max()) ** 3 + T_M**3) * np.abs(u - v).max()
    assert du <= bound + 1e-14


def test_batched_fields():
    g = np.linspace(0, 4, 41)
    w = build_rad_weights(g, 1.0)
    U = np.stack([np.zeros(41), -0.5 * np.ones(41)])
    I = apply_radiation(U, w, 1.0)
    assert np.allclose(I[0], apply_radiation(U[0], w, 1.0))
    assert np.allclose(I[1], apply_radiation(U[1], w, 1.0))
