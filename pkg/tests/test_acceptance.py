"""Acceptance suite: one test per criterion, summary printed at the end.

Run alone with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import dataclasses
import sys
import time

import numpy as np
import pytest
from scipy import integrate
from scipy.optimize import brentq

from radstefan import cli
from radstefan.barriers import barrier_derivatives, construct_barrier, eval_barrier, validate_solution
from radstefan.fdsolver import FDConfig, neumann_similarity_oracle, solve_fd
from radstefan.fixedpoint import FixedPointConfig, compute_admissible_tstar, estimate_contraction_factor, solve
from radstefan.initial_data import ExponentialProfile, NeumannProfile
from radstefan.nondim import NondimParams
from radstefan.radop import apply_radiation, apply_radiation_truncated, build_rad_weights
from radstefan.specfun import (
    KernelArgs,
    d_xi_image_sum,
    e1_moment0,
    exp_integral_e1,
    greens_half_line,
    greens_image_sum,
    greens_periodic,
    heat_kernel_phi,
)

EPS = np.finfo(float).eps
NEUMANN = NondimParams(K=1.5, C=0.8, L=2.0, alpha=1.0, T_M=1.0)


def fmt(v):
    return f"{v:.3g}"


# 1 --------------------------------------------------------------------------

@pytest.mark.acceptance(1, "special functions: E1 identity, E1 mass, heat kernel")
def test_special_functions(record_property):
    t0 = time.perf_counter()
    worst = 0.0
    for z in np.logspace(-3, 2, 20):
        closed = 1.0 - np.exp(-z) + z * exp_integral_e1(z)
        quad = integrate.quad(exp_integral_e1, 0, z, limit=200, epsabs=1e-14, epsrel=1e-13)[0]
        worst = max(worst, abs(quad - closed), abs(e1_moment0(z) - closed))
    assert worst < 1e-10

    mass = integrate.quad(exp_integral_e1, 0, 1)[0] + integrate.quad(exp_integral_e1, 1, np.inf)[0]
    assert abs(mass - 1.0) < 1e-8

    phi_err = 0.0
    for s in (1e-3, 0.1, 1.0, 7.5):
        norm = integrate.quad(heat_kernel_phi, -np.inf, np.inf, args=(s,), epsabs=1e-13)[0]
        phi_err = max(phi_err, abs(norm - 1.0))
    for x, s, t in ((0.0, 0.2, 0.3), (0.7, 0.05, 1.0), (-2.0, 1.5, 0.5)):
        conv = integrate.quad(lambda z: heat_kernel_phi(x - z, s) * heat_kernel_phi(z, t),
                              -np.inf, np.inf, epsabs=1e-13)[0]
        phi_err = max(phi_err, abs(conv - heat_kernel_phi(x, s + t)))
    assert phi_err < 1e-8

    elapsed = time.perf_counter() - t0
    record_property("E1_identity_err", fmt(worst))
    record_property("mass_err", fmt(abs(mass - 1)))
    record_property("phi_err", fmt(phi_err))
    record_property("seconds", f"{elapsed:.2f}")
    assert elapsed < 1.0


# 2 --------------------------------------------------------------------------

def _abs_quad(f, lo, hi, split):
    """int |f| over [lo, hi]: sign changes are bracketed on a fine scan and
    refined with brentq, then the smooth signed pieces go to quad."""
    # geometric clustering at the ends catches roots that leave an end where f = 0
    ends = (hi - lo) * np.logspace(-12, 0, 80)
    xs = np.unique(np.concatenate([np.linspace(lo, hi, 801), lo + ends, hi - ends, [split]]))
    v = np.asarray(f(xs))
    cuts = [brentq(f, xs[i], xs[i + 1]) for i in np.flatnonzero(v[:-1] * v[1:] < 0)]
    edges = np.unique(np.concatenate([[lo, hi, split], cuts]))
    return sum(abs(integrate.quad(f, a, b, limit=200, epsabs=1e-13)[0]) for a, b in zip(edges[:-1], edges[1:]))


def _span(y, at, side):
    """Half-line (side = +1 or -1) cut to y +- 12 sqrt(at); the dropped Gaussian tail is below e^-36."""
    w = 12.0 * np.sqrt(at)
    return (max(0.0, y - w), y + w) if side > 0 else (y - w, min(0.0, y + w))


def _int_dg(y, at, side):
    f = lambda xi: d_xi_image_sum(KernelArgs(y, xi, at))
    return _abs_quad(f, *_span(y, at, side), y)


def _kernel_excess(y, tau, a, R):
    """Largest (quadrature - bound) over the kernel estimates at one triple, both half-lines."""
    at = a * tau
    excess = []
    for side in (1, -1):
        ys = side * y
        excess.append(_int_dg(ys, at, side) - 1.0 / np.sqrt(np.pi * at))
        # r = sqrt(t - tau) removes the inverse square root at the upper end
        inner = lambda r: 2 * r * _int_dg(ys, a * r * r, side) if r > 0 else 0.0
        # at a(t - tau) = y^2/2 the curvature of g at xi = 0 changes sign and a root
        # of d_xi g leaves xi = 0, which puts a kink in the inner integral
        kink = [abs(y) / np.sqrt(2 * a)] if abs(y) / np.sqrt(2 * a) < np.sqrt(tau) else None
        double = integrate.quad(inner, 0.0, np.sqrt(tau), points=kink, limit=100, epsabs=1e-10, epsrel=1e-10)[0]
        excess.append(double - 2 * np.sqrt(tau) / np.sqrt(a * np.pi))
        lo, hi = _span(ys, at, side)
        G = lambda xi: greens_half_line(KernelArgs(ys, xi, at))
        g = lambda xi: greens_image_sum(KernelArgs(ys, xi, at))
        excess.append(_abs_quad(G, lo, hi, ys) - 1.0)
        excess.append(_abs_quad(g, lo, hi, ys) - 1.0)
        GR = lambda xi: greens_periodic(KernelArgs(ys, xi, at, R=R))
        plo, phi = (0.0, R) if side > 0 else (-R, 0.0)
        excess.append(_abs_quad(GR, plo, phi, ys) - 2.0)
    return max(excess)


@pytest.mark.acceptance(2, "kernel bounds by adaptive quadrature")
def test_kernel_bounds(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = -np.inf
    for _ in range(10):
        y, tau, a, R = rng.uniform(0.0, 3.0), rng.uniform(0.01, 2.0), rng.uniform(0.2, 5.0), rng.uniform(4.0, 8.0)
        worst = max(worst, _kernel_excess(y, tau, a, R))
    elapsed = time.perf_counter() - t0
    record_property("max_excess", fmt(worst))
    record_property("seconds", f"{elapsed:.2f}")
    assert worst <= 1e-9
    assert elapsed < 10.0


# 3 --------------------------------------------------------------------------

def unit_temperature_oracle(y, alpha):
    z = alpha * np.asarray(y, dtype=float)
    e1z = np.zeros_like(z)
    e1z[z > 0] = exp_integral_e1(z[z > 0])
    return 0.5 * (np.exp(-z) - z * e1z)


def quad_radiation(y, alpha, R, temp):
    kern = lambda e: 0.5 * alpha * exp_integral_e1(alpha * abs(y - e)) * temp(e) ** 4 if e != y else 0.0
    left = integrate.quad(kern, 0, y, limit=400, epsabs=1e-14)[0] if y > 0 else 0.0
    right = integrate.quad(kern, y, R, limit=400, epsabs=1e-14)[0]
    return temp(y) ** 4 - left - right


@pytest.mark.acceptance(3, "radiation operator: unit-temperature closed form and order")
def test_radiation_operator(record_property):
    alpha = 1.0
    g = np.linspace(0.0, 12.0, 1226)
    I = apply_radiation(np.zeros_like(g), build_rad_weights(g, alpha), 1.0)
    idx = np.arange(0, 1226, 25)
    assert idx.size == 50
    err = np.abs(I[idx] - unit_temperature_oracle(g[idx], alpha)).max()
    record_property("closed_form_err", fmt(err))
    assert err < 1e-6

    temp = lambda x: 1.0 + 0.5 * np.exp(-x) * np.cos(2 * x)
    alpha, R = 1.3, 12.0
    ys = np.array([0.0, 1.0, 2.0, 3.0, 6.0])
    ref = np.array([quad_radiation(y, alpha, R, temp) for y in ys])
    errs = []
    for n in (120, 240, 480):
        x = np.linspace(0, R, n + 1)
        J = apply_radiation_truncated(temp(x) - 1.0, build_rad_weights(x, alpha), 1.0, R)
        errs.append(np.abs(J[np.searchsorted(x, ys)] - ref).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    record_property("orders", "/".join(f"{o:.3f}" for o in orders))
    # empirical orders approach 2 from below; compared at one decimal
    assert np.all(np.round(orders, 1) >= 2.0)


# 4 --------------------------------------------------------------------------

@pytest.mark.acceptance(4, "contraction at t*, regime detection at 100 t*")
def test_contraction_regime(record_property):
    t0 = time.perf_counter()
    p = NondimParams(K=0.25, C=0.0625, L=1.0, alpha=1.0, T_M=0.0)
    cfg = FixedPointConfig(C1=20.0, C2=0.1, C3=0.1, theta=0.5, lam=0.5, n_space=200, n_time=50)
    tstar = compute_admissible_tstar(cfg, p, 0.0)
    at = estimate_contraction_factor(cfg, p, n_samples=20, seed=0, window=tstar, return_details=True)
    big = estimate_contraction_factor(cfg, p, n_samples=20, seed=0, window=100 * tstar, return_details=True)
    elapsed = time.perf_counter() - t0
    record_property("tstar", fmt(tstar))
    record_property("factor", fmt(at.factor))
    record_property("factor_100", fmt(big.factor))
    record_property("seconds", f"{elapsed:.1f}")
    assert len(at.ratios) == 20 and len(big.ratios) == 20
    assert at.factor <= 0.55
    assert max(big.ratios) > 1.0
    assert elapsed < 120.0


# 5 --------------------------------------------------------------------------

@pytest.mark.acceptance(5, "Neumann regression, radiation off")
def test_neumann_regression(record_property):
    t0 = time.perf_counter()
    oracle = neumann_similarity_oracle(NEUMANN, 2.0, 0.4)
    prof, horizon = NeumannProfile(oracle, 0.05), 0.5
    exact = oracle.front_shifted(np.array([horizon]), 0.05)[0]

    fp = solve(prof, horizon, FixedPointConfig(window=0.05, n_space=200, n_time=50, radiation=False), NEUMANN)
    assert not fp.truncated and fp.t[-1] == pytest.approx(horizon)
    fp_rel = abs(fp.s[-1] - exact) / abs(exact)

    s_fd = []
    for dt in (4e-3, 2e-3, 1e-3):
        f = solve_fd(prof, NEUMANN, horizon=horizon, cfg=FDConfig(n=400, dt=dt, radiation=False))
        s_fd.append(f.s[-1])
    fd_rel = abs(s_fd[-1] - exact) / abs(exact)
    # self-convergence removes the (dt independent) spatial error
    order = np.log2(abs(s_fd[0] - s_fd[1]) / abs(s_fd[1] - s_fd[2]))
    elapsed = time.perf_counter() - t0

    record_property("fp_rel", fmt(fp_rel))
    record_property("fd_rel", fmt(fd_rel))
    record_property("fd_dt_order", f"{order:.2f}")
    record_property("seconds", f"{elapsed:.1f}")
    assert fp_rel < 0.01 and fd_rel < 0.01
    assert order >= 1.0
    assert elapsed < 120.0


# 6 --------------------------------------------------------------------------

def _snap(sol, t):
    k = int(np.argmin(np.abs(sol.snap_t - t)))
    assert abs(sol.snap_t[k] - t) < 1e-9
    return k


def _cross_discrepancy(fp, fd, times):
    dT = ds = 0.0
    for t in times:
        i, j = _snap(fp, t), _snap(fd, t)
        for yf, uf, yd, ud in ((fp.y_solid, fp.u_solid, fd.y_solid, fd.u_solid),
                               (fp.y_liquid, fp.u_liquid, fd.y_liquid, fd.u_liquid)):
            dT = max(dT, np.abs(uf[i] - np.interp(yf, yd, ud[j])).max())
        ds = max(ds, abs(np.interp(t, fp.t, fp.s) - np.interp(t, fd.t, fd.s)))
    return dT, ds


@pytest.mark.acceptance(6, "cross-solver equivalence, radiation on")
def test_cross_solver(record_property):
    prof, horizon, times = ExponentialProfile(1.0, 0.5, 1.0, 0.5, 1.0), 0.2, (0.04, 0.1, 0.2)
    construct_barrier(prof.sample_uniform(8.0, 400), NEUMANN)  # raises if the data are not admissible
    dTs, dss = [], []
    for n, nt, fd_n, fd_dt in ((50, 10, 50, 4e-3), (100, 20, 100, 2e-3), (200, 40, 200, 1e-3)):
        fp = solve(prof, horizon, FixedPointConfig(window=0.1, n_space=n, n_time=nt), NEUMANN)
        fd = solve_fd(prof, NEUMANN, horizon=horizon, cfg=FDConfig(n=fd_n, dt=fd_dt))
        dT, ds = _cross_discrepancy(fp, fd, times)
        dTs.append(dT)
        dss.append(ds)
    record_property("dT", "/".join(fmt(v) for v in dTs))
    record_property("ds", "/".join(fmt(v) for v in dss))
    assert np.all(np.diff(dTs) < 0) and np.all(np.diff(dss) < 0)
    assert dTs[-1] < 1e-2 and dss[-1] < 1e-2


# 7 --------------------------------------------------------------------------

BARRIER_CASES = [
    (1.5, 0.8, 2.0, 1.0, 0.5, 0.6),
    (0.5, 1.0, 0.7, 0.8, 0.3, 0.1),
    (3.0, 2.0, 5.0, 1.2, 1.0, 0.9),
    (1.0, 1.0, 1.0, 1.0, 1.0, 0.0),
    (2.0, 0.5, 0.5, 0.5, 0.2, 0.4),
]


@pytest.mark.acceptance(7, "maximum principle and barriers over the horizon")
def test_barrier_suite(record_property):
    counts, planted = [], None
    for K, C, L, T_M, a, b in BARRIER_CASES:
        p = NondimParams(K=K, C=C, L=L, alpha=1.0, T_M=T_M)
        prof = ExponentialProfile(T_M, a, 1.0, b, 0.7)
        spec = construct_barrier(prof.sample_uniform(8.0, 400), p)
        sol = solve(prof, 1.0, FixedPointConfig(window=0.1, n_space=200, n_time=20), p)
        assert not sol.truncated and sol.t[-1] == pytest.approx(1.0)
        counts.append(len(validate_solution(sol, spec).violations))
        if planted is None:
            planted = (sol, spec)
    record_property("violations", counts)
    assert counts == [0] * len(BARRIER_CASES)

    sol, spec = planted
    bad = dataclasses.replace(sol, u_solid=sol.u_solid.copy())
    k, j = bad.u_solid.shape[0] // 2, 10
    bad.u_solid[k, j] = 0.05  # solid above the melting temperature
    rep = validate_solution(bad, spec)
    hits = [v for v in rep.violations if v["check"] == "T2 <= T_M"]
    record_property("planted_detected", len(hits) == 1)
    assert not rep.ok and len(hits) == 1
    assert hits[0]["t"] == bad.snap_t[k] and hits[0]["y"] == bad.y_solid[j]


# 8 --------------------------------------------------------------------------

def barrier_failures(spec, T0):
    """Names of the checks a constructed barrier fails."""
    out = list(spec.invariant_violations())
    if not spec.slope_right() > -spec.L * spec.C1:
        out.append("slope_right > -L C1")
    if not np.all(T0.T_liquid[:-1] < eval_barrier(spec, T0.y_liquid[:-1])):
        out.append("T0 < w (liquid)")
    if not np.all(T0.T_solid[1:] > eval_barrier(spec, T0.y_solid[1:])):
        out.append("T0 > w (solid)")
    y = np.linspace(1e-3, 8.0, 1000)
    d1, d2 = barrier_derivatives(spec, y)
    w = eval_barrier(spec, y)
    # rounding scale of d2 + C2 d1, whose terms of size C2^2 T_M e^{-C2 y} cancel
    scale = 2 * spec.C2**2 * spec.T_M * (np.exp(-spec.C2 * y) + np.exp(-4 * spec.C2 * y)) + w**4
    if not np.all(d2 + spec.C2 * d1 - w**4 >= -(64 * EPS * scale + 1e-300)):
        out.append("w'' + C2 w' >= w^4")
    return out


@pytest.mark.acceptance(8, "barrier construction over 1000 random draws")
def test_barrier_algebra(record_property):
    rng = np.random.default_rng(8)
    logu = lambda: float(np.exp(rng.uniform(np.log(0.05), np.log(20.0))))
    failures = []
    for i in range(1000):
        T_M, L, K, kappa = logu(), logu(), logu(), logu()
        p = NondimParams(K=K, C=K / kappa, L=L, alpha=1.0, T_M=T_M)
        a = rng.uniform(0.01, 0.95) * kappa * L**2 / (K * T_M)
        b = rng.uniform(0.05, 0.95) * T_M
        T0 = ExponentialProfile(T_M, a, np.exp(rng.uniform(np.log(0.2), np.log(3))), b,
                                np.exp(rng.uniform(np.log(0.2), np.log(3)))).sample_uniform(8.0, 200)
        try:
            bad = barrier_failures(construct_barrier(T0, p), T0)
        except Exception as exc:  # noqa: BLE001, any error counts as a failure
            bad = [repr(exc)]
        if bad:
            failures.append((i, bad))
    record_property("failures", len(failures))
    assert failures == []


# 9 --------------------------------------------------------------------------

RUN_CONFIG = """
[params]
K = 1.5
C = 0.8
L = 2.0
alpha = 1.0
T_M = 1.0

[initial]
family = exponential
a = 0.5
l_liquid = 1.0
b = 0.6
l_solid = 0.7

[solver]
method = both
horizon = 0.1
window = 0.05
n_space = 80
n_time = 10
fd_n = 80
fd_dt = 2e-3

[run]
contraction_samples = 4
"""


@pytest.mark.acceptance(9, "byte-identical CSVs from repeated runs")
def test_determinism(tmp_path, record_property):
    path = tmp_path / "run.ini"
    path.write_text(RUN_CONFIG)
    outs = [tmp_path / "a", tmp_path / "b"]
    for d in outs:
        assert cli.main(["run", "--config", str(path), "--out", str(d), "--seed", "11"]) == 0
    names = sorted(f.name for f in outs[0].glob("*.csv"))
    assert names == sorted(f.name for f in outs[1].glob("*.csv"))
    assert len(names) == 4
    same = [(outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names]
    record_property("csv_files", len(names))
    assert all(same)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-rN"]))
