import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radstefan.barriers import (
    BarrierSpec,
    InadmissibleDataError,
    barrier_derivatives,
    check_admissible_initial_data,
    construct_barrier,
    eval_barrier,
    theta_from_margin,
    validate_solution,
)
from radstefan.initial_data import ExponentialProfile, Profile
from radstefan.nondim import NondimParams
from radstefan.solution import Solution

EPS = np.finfo(float).eps


def unit_spec(**kw):
    base = dict(C1=2.0, C2=1.0, alpha_w=-0.5, T_M=1.0, L=1.0, K=1.0, kappa=1.0)
    base.update(kw)
    return BarrierSpec(**base)


def subsolution_residual(spec, y):
    """(w'' + C2 w' - w^4, rounding scale of the left-hand side)."""
    d1, d2 = barrier_derivatives(spec, y)
    w = eval_barrier(spec, y)
    # d2 and C2 d1 each carry terms of size C2^2 T_M e^{-C2 y} that cancel
    scale = 2 * spec.C2**2 * spec.T_M * (np.exp(-spec.C2 * y) + np.exp(-4 * spec.C2 * y)) + w**4
    return d2 + spec.C2 * d1 - w**4, 64 * EPS * scale + 1e-300  # subnormal floor


def test_gamma_example():
    lo, hi = unit_spec().gamma()
    assert lo == pytest.approx((2 - np.sqrt(3)) / 2, rel=1e-14)
    assert hi == pytest.approx((2 + np.sqrt(3)) / 2, rel=1e-14)
    assert lo == pytest.approx(0.1340, abs=1e-4) and hi == pytest.approx(1.8660, abs=1e-4)


def test_example_spec_valid():
    s = unit_spec()
    assert s.invariant_violations() == []
    assert s.slope_right() == pytest.approx(-1.25)
    assert s.slope_right() > -s.L * s.C1


def test_gamma_roots_solve_quadratic():
    s = unit_spec(T_M=0.7, L=2.3, C1=1.9)
    for c in s.gamma():
        assert 4 * s.T_M * c**2 - 4 * s.L * s.C1 * c + s.T_M**4 == pytest.approx(0, abs=1e-12)


def test_gamma_zero_melting_temperature():
    lo, hi = unit_spec(T_M=0.0).gamma()
    assert lo == 0.0 and hi == np.inf


def test_c2_at_lower_bound_rejected():
    T_M = 1.0
    s = unit_spec(C2=T_M**1.5 / (2 * np.sqrt(3)))
    assert "C2 > T_M^(3/2)/(2 sqrt 3)" in s.invariant_violations()


@pytest.mark.parametrize("field, value, name", [
    ("C1", 0.9, "C1 > sqrt(T_M^5 + 1)/L"),
    ("alpha_w", -1.5, "-(L/K) C2 < alpha_w < 0"),
    ("alpha_w", 0.0, "-(L/K) C2 < alpha_w < 0"),
    ("C2", 1.9, "Gamma-(C1) < C2 < Gamma+(C1)"),
])
def test_invariant_names(field, value, name):
    assert name in unit_spec(**{field: value}).invariant_violations()


def test_eval_barrier_limits():
    s = unit_spec()
    assert eval_barrier(s, 0.0) == 1.0
    assert eval_barrier(s, 60.0) < 1e-25
    assert eval_barrier(s, -200.0) == pytest.approx(s.liquid_limit(), rel=1e-14)
    y = np.linspace(-8, 20, 2001)
    assert np.all(np.diff(eval_barrier(s, y)) < 0)


def test_barrier_continuous_at_zero():
    s = unit_spec(T_M=0.8, C2=1.3)
    assert eval_barrier(s, -1e-12) == pytest.approx(0.8, abs=1e-11)
    assert eval_barrier(s, 1e-12) == pytest.approx(0.8, abs=1e-11)


@pytest.mark.parametrize("y", [0.1, 1.0, 3.0])
def test_ode_identity_finite_differences(y):
    s = unit_spec(T_M=0.9, C2=0.8)
    target = s.T_M**4 * np.exp(-4 * s.C2 * y)
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        w = eval_barrier(s, np.array([y - h, y, y + h]))
        d2 = (w[2] - 2 * w[1] + w[0]) / h**2
        d1 = (w[2] - w[0]) / (2 * h)
        errs.append(abs(d2 + s.C2 * d1 - target))
    assert errs[-1] < 1e-4
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


def test_ode_identity_closed_form():
    s = unit_spec(T_M=1.3, C2=2.1)
    y = np.linspace(1e-3, 5, 400)
    d1, d2 = barrier_derivatives(s, y)
    assert np.allclose(d2 + s.C2 * d1, s.T_M**4 * np.exp(-4 * s.C2 * y), rtol=1e-12, atol=1e-14)


def test_liquid_branch_ode():
    s = unit_spec(C1=1.7, kappa=0.6)
    y = -np.linspace(1e-3, 5, 50)
    d1, d2 = barrier_derivatives(s, y)
    assert np.allclose(s.kappa * d2 - s.C1 * d1, 0, atol=1e-13)
    assert barrier_derivatives(s, np.array([-1e-15]))[0][0] == pytest.approx(s.alpha_w)


def params(T_M=1.0, L=1.0, K=1.0, kappa=1.0):
    return NondimParams(K=K, C=K / kappa, L=L, alpha=1.0, T_M=T_M)


class TanhProfile(Profile):
    """T_M - a tanh(y) in the liquid, tanh decay toward b in the solid."""

    def __init__(self, T_M, a, b):
        self.T_M, self.a, self.b = T_M, a, b

    def T_liquid(self, y):
        return self.T_M - self.a * np.tanh(y)

    def dT_liquid(self, y):
        return -self.a / np.cosh(y) ** 2

    def T_solid(self, y):
        return self.b + (self.T_M - self.b) * (1 - np.tanh(y))

    def dT_solid(self, y):
        return -(self.T_M - self.b) / np.cosh(y) ** 2


def test_admissible_example():
    T0 = TanhProfile(1.0, 0.3, 0.2).sample_uniform(8.0, 200)
    rep = check_admissible_initial_data(T0, params())
    assert rep.admissible and rep.violated() == []
    assert rep.sup_liquid_margin == pytest.approx(1.0 - 0.3 * np.tanh(8.0), rel=1e-12)
    assert rep.inf_solid_positive and min(rep.derivative_margins) > 0


def test_sup_at_bound_inadmissible():
    p = params(L=0.5, K=2.0, kappa=0.7)
    bound = p.kappa * p.L**2 / (p.K * p.T_M)
    T0 = ExponentialProfile(1.0, bound, 0.5, 0.1, 1.0).sample_uniform(60.0, 600)
    T0.T_liquid[0] = 1.0 + bound  # exp(-120) tail makes the sup exact
    rep = check_admissible_initial_data(T0, p)
    assert not rep.admissible
    assert rep.sup_liquid_margin <= 0
    with pytest.raises(InadmissibleDataError, match="sup T0"):
        construct_barrier(T0, p)


def test_wrong_side_structurally_invalid():
    T0 = ExponentialProfile(1.0, 0.3, 1.0, 0.2, 1.0).sample_uniform(5.0, 50)
    T0.T_liquid[10] = 0.9
    rep = check_admissible_initial_data(T0, params())
    assert not rep.structurally_valid and not rep.admissible
    assert any("wrong side" in v for v in rep.violated())


def test_interface_value_mismatch_flagged():
    T0 = ExponentialProfile(1.0, 0.3, 1.0, 0.2, 1.0).sample_uniform(5.0, 50)
    T0.T_solid[0] = 1.01
    rep = check_admissible_initial_data(T0, params())
    assert "T0(0) != T_M" in rep.details["structure"]


def test_theta_shrinks_with_sup():
    p = params(L=1.5, K=0.8, kappa=1.2)
    bound = p.kappa * p.L**2 / (p.K * p.T_M)
    excess = bound * (1 - 0.5 ** np.arange(1, 12))  # doubling toward the bound
    thetas = [theta_from_margin(1.0 + e, p, 1.0) for e in excess]
    assert np.all(np.diff(thetas) < 0)
    assert 0 < thetas[-1] < thetas[0] < 1


def _check_constructed(spec, T0):
    assert spec.invariant_violations() == []
    assert spec.slope_right() > -spec.L * spec.C1
    assert -spec.L / spec.K * spec.C2 < spec.alpha_w < 0
    assert np.all(T0.T_liquid[:-1] < eval_barrier(spec, T0.y_liquid[:-1]))
    assert np.all(T0.T_solid[1:] > eval_barrier(spec, T0.y_solid[1:]))
    assert np.abs(T0.dT_liquid).max() < abs(spec.alpha_w)
    assert np.abs(T0.dT_solid).max() < abs(spec.slope_right())
    # positive gap at the sampling boundary
    assert eval_barrier(spec, T0.y_liquid[0]) - T0.T_liquid[0] > 0
    assert T0.T_solid[-1] - eval_barrier(spec, T0.y_solid[-1]) > 0
    y = np.linspace(1e-3, 8.0, 1000)
    r, tol = subsolution_residual(spec, y)
    assert np.all(r >= -tol)


def test_construct_unit_example():
    T0 = TanhProfile(1.0, 0.3, 0.2).sample_uniform(8.0, 200)
    spec = construct_barrier(T0, params())
    _check_constructed(spec, T0)


def test_construct_near_bound():
    p = params(L=0.7, K=1.3, kappa=0.9)
    bound = p.kappa * p.L**2 / (p.K * p.T_M)
    T0 = ExponentialProfile(1.0, 0.95 * bound, 0.4, 0.05, 0.3).sample_uniform(8.0, 200)
    _check_constructed(construct_barrier(T0, p), T0)


logu = lambda lo, hi: st.floats(np.log(lo), np.log(hi)).map(np.exp)


@settings(max_examples=150, deadline=None)
@given(logu(0.05, 20), logu(0.05, 20), logu(0.05, 20), logu(0.05, 20),
       st.floats(0.01, 0.95), st.floats(0.05, 0.95), logu(0.2, 3), logu(0.2, 3))
def test_construct_randomized(T_M, L, K, kappa, frac, bfrac, ll, ls):
    p = params(T_M=T_M, L=L, K=K, kappa=kappa)
    a = frac * kappa * L**2 / (K * T_M)
    T0 = ExponentialProfile(T_M, a, ll, bfrac * T_M, ls).sample_uniform(8.0, 200)
    _check_constructed(construct_barrier(T0, p), T0)


def test_subsolution_exact_at_cancellation_case():
    # large C2, small T_M: float residual is rounding-dominated, exact one is >= 0
    mp = pytest.importorskip("mpmath")
    s = unit_spec(C1=1.06, C2=105.66571027505526, alpha_w=-1.0, T_M=0.07052806886903949, L=7.34, K=5.59)
    mp.mp.dps = 50
    T, C = mp.mpf(s.T_M), mp.mpf(s.C2)
    b = T**3 / (12 * C**2)
    for y in (1e-3, 1e-2, 0.1):
        yy = mp.mpf(y)
        w = T * mp.e ** (-C * yy) * (1 - b + b * mp.e ** (-3 * C * yy))
        assert T**4 * mp.e ** (-4 * C * yy) - w**4 >= 0
    r, tol = subsolution_residual(s, np.array([1e-3, 1e-2, 0.1]))
    assert np.all(r >= -tol)


def _solution(T_M=1.0, u_liq=None, u_sol=None, sdot=0.0, n=41, R=4.0, nt=5):
    y = np.linspace(0, R, n)
    t = np.linspace(0, 1, nt)
    ul = np.zeros((nt, n)) if u_liq is None else u_liq
    us = np.zeros((nt, n)) if u_sol is None else u_sol
    return Solution(t=t, s=sdot * t, sdot=np.full(nt, sdot), snap_t=t, y_liquid=-y[::-1], y_solid=y,
                    u_liquid=ul, u_solid=us, du_liquid=np.zeros_like(ul), du_solid=np.zeros_like(us), T_M=T_M)


def test_validate_zero_solution_zero_melting():
    spec = unit_spec(T_M=0.0)
    rep = validate_solution(_solution(T_M=0.0), spec)
    assert rep.ok, rep.violations


def _good_solution(spec, n=41, R=4.0, nt=5):
    y = np.linspace(0, R, n)
    wl = eval_barrier(spec, -y[::-1])
    ws = eval_barrier(spec, y)
    ul = np.tile(0.5 * (wl - spec.T_M), (nt, 1))
    us = np.tile(0.5 * (ws - spec.T_M), (nt, 1))
    return _solution(T_M=spec.T_M, u_liq=ul, u_sol=us, sdot=0.1, n=n, R=R, nt=nt)


def test_validate_good_solution():
    spec = unit_spec()
    rep = validate_solution(_good_solution(spec), spec)
    assert rep.ok
    assert all(v > 0 for v in rep.margins.values())


def test_fault_injection_pinpointed():
    spec = unit_spec()
    sol = _good_solution(spec)
    sol.u_solid[3, 17] = 0.2  # T2 above T_M
    rep = validate_solution(sol, spec)
    assert not rep.ok
    hit = [v for v in rep.violations if v["check"] == "T2 <= T_M"]
    assert len(hit) == 1
    assert hit[0]["t"] == sol.snap_t[3] and hit[0]["y"] == sol.y_solid[17]


def test_speed_violation_reported():
    spec = unit_spec()
    sol = _good_solution(spec)
    sol.sdot[2] = spec.C2
    rep = validate_solution(sol, spec)
    assert [v["check"] for v in rep.violations] == ["sdot < C2"]
    assert rep.summary()["n_violations"] == 1


def test_barrier_ordering_violation():
    spec = unit_spec()
    sol = _good_solution(spec)
    sol.u_liquid[1, 5] = eval_barrier(spec, sol.y_liquid[5]) - spec.T_M
    rep = validate_solution(sol, spec)
    assert {v["check"] for v in rep.violations} == {"T1 < w"}
