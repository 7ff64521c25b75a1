"""Green's-function fixed-point solver in the front-fixed frame.

The liquid is stored mirrored, q(t, x) = u1(t, -x) on [0, R], so both
phases live on the same uniform grid and share one kernel family: the
Dirichlet Green's function of [0, R] (period 2R images) and its Neumann
twin g, with d/dy G = -d/dxi g. On [0, R] the unknowns satisfy

    q  = int q0 G(kt)  + int int (-sdot q') G(k(t - tau))
    q' = int q0' g(kt) - int int (-sdot q') d_xi g(k(t - tau))
    u  = int u0 G(t)   + int int (sdot u' - I) G(t - tau)
    u' = int u0' g(t)  - int int (sdot u' - I) d_xi g(t - tau)
    L sdot = u'(0) + K q'(0)

with k the liquid diffusivity and I the radiation term restricted to
[0, R]. Space integrals are exact against piecewise-linear data; time
integrals treat the integrand as piecewise linear in tau and integrate the
kernel against it with Gauss-Legendre in r = sqrt(t - tau), which removes
the inverse square-root singularity of d_xi g.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from ._backend import kernels
from .initial_data import fields_on_grid
from .nondim import NondimParams
from .radop import apply_radiation_truncated, build_rad_weights
from .solution import Solution, concatenate, front_from_speed
from .specfun import image_pairs_needed


class NonContractionError(RuntimeError):
    """Picard iteration stopped contracting.

    Attributes
    ----------
    ratios : list of float
        Successive difference ratios observed so far.
    """

    def __init__(self, msg, ratios):
        super().__init__(msg)
        self.ratios = list(ratios)


class BallError(ValueError):
    """Ball constants too small for the initial data."""


@dataclass
class FixedPointConfig:
    """Settings of the fixed-point solver.

    C1, C2, C3 left as None are chosen from the data as ``ball_margin``
    times their lower bounds. ``window`` overrides the admissible time
    t* when set (the formula is very conservative).
    """

    C1: float | None = None
    C2: float | None = None
    C3: float | None = None
    theta: float = 0.5
    lam: float = 0.5
    tol: float = 1e-10
    domain_R: float = 8.0
    n_space: int = 200
    n_time: int = 50
    window: float | None = None
    max_iter: int = 200
    radiation: bool = True
    rad_tol: float = 1e-12
    n_gauss: int = 6
    n_sigma: float = 8.0
    ball_margin: float = 1.05
    ball_floor: float = 1e-12
    tstar_floor: float = 1e-12
    restart_tol_factor: float = 10.0
    max_windows: int = 500
    cutoff: bool = True

    def __post_init__(self):
        if not 0 < self.theta < 1 or not 0 < self.lam < 1:
            raise ValueError("theta and lam must lie in (0, 1)")
        if self.n_space < 2 or self.n_time < 1:
            raise ValueError("need n_space >= 2 and n_time >= 1")
        if self.window is not None and not self.window > 0:
            raise ValueError("window must be > 0")

    def grid(self):
        return np.linspace(0.0, self.domain_R, self.n_space + 1)

    def with_ball(self, norm_u0, params: NondimParams):
        """Copy with unset ball constants filled in from ``norm_u0``."""
        b12 = norm_u0 / (1.0 - self.theta)
        b3 = (1.0 + params.K) / params.L * b12
        pick = lambda c, b: c if c is not None else max(self.ball_margin * b, self.ball_floor)
        return replace(self, C1=pick(self.C1, b12), C2=pick(self.C2, b12), C3=pick(self.C3, b3))

    def ball_violations(self, norm_u0, params: NondimParams):
        """Names of the ball conditions that fail for data of size ``norm_u0``."""
        b12 = norm_u0 / (1.0 - self.theta)
        need = {"C1": b12, "C2": b12, "C3": (1.0 + params.K) / params.L * b12}
        return [f"{k} = {getattr(self, k)!r} must exceed {v!r}" for k, v in need.items()
                if getattr(self, k) is None or not getattr(self, k) > v]


def _div(a, b):
    return np.inf if b == 0 else a / b


def admissible_time_terms(cfg: FixedPointConfig, params: NondimParams, norm_u0):
    """The candidate local times whose minimum is t*.

    Unset ball constants are filled from ``norm_u0`` first; raises
    BallError if explicit ones are too small. Returns a dict with the
    self-map times ``t1``, ``t2``, ``t3`` (q, u and speed components) and
    ``contraction``. Divisions by T_M = 0 count as infinite.
    """
    cfg = cfg.with_ball(norm_u0, params)
    bad = cfg.ball_violations(norm_u0, params)
    if bad:
        raise BallError("; ".join(bad))
    C1, C2, C3, th, lam = cfg.C1, cfg.C2, cfg.C3, cfg.theta, cfg.lam
    K, L, ka, TM = params.K, params.L, params.kappa, params.T_M
    sp = np.sqrt(np.pi)
    t1 = 0.5 * min(th / C3, th**2 * ka * np.pi / (8.0 * C3**2))
    t2 = min(th / C3, th / (16.0 * C2**3), _div(th * C2, 16.0 * TM**4),
             (sp * th / (2.0 * C3)) ** 2 / 6.0, (sp * th / (32.0 * C2**3)) ** 2 / 6.0,
             _div(sp * th * C2, 32.0 * TM**4) ** 2 / 6.0) / 6.0
    t3 = L**2 * np.pi * th**2 / 64.0 * min(
        (1.0 / C2) ** 2, (np.sqrt(ka) / (K * C1)) ** 2,
        (C3 / (16.0 * C2**4)) ** 2, _div(C3, 16.0 * TM**4) ** 2)
    rad = C3 + 32.0 * (C2**3 + TM**3)
    dif = C1 / ka + C2
    tc = min(lam / (3.0 * C3), (lam * np.sqrt(ka * np.pi) / (6.0 * C3)) ** 2,
             (lam * np.sqrt(ka * np.pi) * L / (6.0 * C3)) ** 2,
             lam / (3.0 * rad), (lam * sp / (6.0 * rad)) ** 2, (lam * sp * L / (6.0 * rad)) ** 2,
             lam / (3.0 * (C1 + C2)), (lam * sp / (6.0 * dif)) ** 2, (lam * sp * L / (6.0 * dif)) ** 2)
    return {"t1": float(t1), "t2": float(t2), "t3": float(t3), "contraction": float(tc)}


def compute_admissible_tstar(cfg: FixedPointConfig, params: NondimParams, norm_u0):
    """Admissible local time: self-map and contraction estimates both hold below it.

    See ``admissible_time_terms``. Note t* is not monotone in C2 and C3,
    which also appear in numerators.
    """
    return min(admissible_time_terms(cfg, params, norm_u0).values())


@dataclass
class SolverState:
    """Iterate on one window: fields on (n_time + 1) x (n_space + 1) nodes.

    q, dq are the mirrored liquid value and x-derivative, u, du the solid
    ones; row 0 holds the initial data.
    """

    t: np.ndarray
    x: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    u: np.ndarray
    du: np.ndarray
    sdot: np.ndarray

    def distance(self, other):
        """A-norm of the difference."""
        m = lambda a, b: np.abs(a - b).max()
        return float(max(m(self.q, other.q), m(self.dq, other.dq))
                     + max(m(self.u, other.u), m(self.du, other.du))
                     + m(self.sdot, other.sdot))

    def norms(self):
        """(liquid, solid, speed) parts of the A-norm."""
        return (float(max(np.abs(self.q).max(), np.abs(self.dq).max())),
                float(max(np.abs(self.u).max(), np.abs(self.du).max())),
                float(np.abs(self.sdot).max()))

    def to_solution(self, T_M, **diagnostics):
        return Solution(
            t=self.t.copy(), s=front_from_speed(self.t, self.sdot), sdot=self.sdot.copy(),
            snap_t=self.t.copy(), y_liquid=-self.x[::-1], y_solid=self.x.copy(),
            u_liquid=self.q[:, ::-1].copy(), u_solid=self.u.copy(),
            du_liquid=-self.dq[:, ::-1], du_solid=self.du.copy(),
            T_M=T_M, method="fixedpoint", diagnostics=diagnostics)


# kernel banks ------------------------------------------------------------

def _r_panels(dt, N, h):
    """Panels in r = sqrt(sigma): geometric refinement of lag cell 0."""
    top = np.sqrt(dt)
    depth = int(np.clip(np.ceil(np.log2(top / (0.05 * h))), 2, 40))
    edges0 = np.concatenate([[0.0], top * 0.5 ** np.arange(depth, -1, -1)])
    cells = [list(zip(edges0[:-1], edges0[1:]))]
    for k in range(1, N):
        cells.append([(np.sqrt(k * dt), np.sqrt((k + 1) * dt))])
    return cells


@lru_cache(maxsize=4)
def _time_bank(a, dt, N, R, M, n_gauss, n_sigma):
    """Per-lag weights P_k, Q_k of G and d_xi g at diffusivity a.

    out[n] = sum_k P_k F[n - k] + Q_k F[n - k - 1] approximates
    int_0^{t_n} M(t_n - tau) F(tau) d tau for F linear on each time cell.
    """
    x = np.linspace(0.0, R, M + 1)
    period = 2.0 * R
    pairs = image_pairs_needed(R, a * N * dt)
    gr, gw = np.polynomial.legendre.leggauss(n_gauss)
    shape = (N, M + 1, M + 1)
    PG, QG, Pd, Qd = (np.zeros(shape) for _ in range(4))
    for k, panels in enumerate(_r_panels(dt, N, x[1])):
        for r0, r1 in panels:
            rs = 0.5 * (r1 - r0) * gr + 0.5 * (r1 + r0)
            ws = 0.5 * (r1 - r0) * gw * 2.0 * rs
            for r, w in zip(rs, ws):
                sig = r * r
                MG, _, Mdg = kernels.gauss_hat_matrices(x, x, a * sig, period, pairs, n_sigma)
                wp = w * ((k + 1) * dt - sig) / dt
                wq = w * (sig - k * dt) / dt
                PG[k] += wp * MG
                QG[k] += wq * MG
                Pd[k] += wp * Mdg
                Qd[k] += wq * Mdg
    for arr in (PG, QG, Pd, Qd):
        arr.setflags(write=False)
    return PG, QG, Pd, Qd


@lru_cache(maxsize=4)
def _initial_bank(a, dt, N, R, M, n_sigma):
    """G and g hat matrices at s = a t_n; identity at n = 0."""
    x = np.linspace(0.0, R, M + 1)
    pairs = image_pairs_needed(R, a * N * dt)
    G = np.empty((N + 1, M + 1, M + 1))
    g = np.empty_like(G)
    G[0] = g[0] = np.eye(M + 1)
    for n in range(1, N + 1):
        G[n], g[n], _ = kernels.gauss_hat_matrices(x, x, a * n * dt, 2.0 * R, pairs, n_sigma)
    G.setflags(write=False)
    g.setflags(write=False)
    return G, g


def clear_kernel_cache():
    _time_bank.cache_clear()
    _initial_bank.cache_clear()


def _duhamel(F, P, Q):
    N = F.shape[0] - 1
    out = np.zeros_like(F)
    for k in range(N):
        out[k + 1:] += F[1:N - k + 1] @ P[k].T + F[0:N - k] @ Q[k].T
    return out


class _Window:
    """Everything that stays fixed during the Picard iteration of one window."""

    def __init__(self, q0, dq0, u0, du0, length, cfg, params, T_M):
        self.cfg, self.params, self.T_M = cfg, params, T_M
        N, M, R = cfg.n_time, cfg.n_space, cfg.domain_R
        self.x = cfg.grid()
        self.dt = length / N
        self.t = self.dt * np.arange(N + 1)
        key = (self.dt, N, float(R), M)
        self.liq = _time_bank(params.kappa, *key, cfg.n_gauss, cfg.n_sigma)
        self.sol = _time_bank(1.0, *key, cfg.n_gauss, cfg.n_sigma)
        Gl, gl = _initial_bank(params.kappa, *key, cfg.n_sigma)
        Gs, gs = _initial_bank(1.0, *key, cfg.n_sigma)
        self.q_init, self.dq_init = Gl @ q0, gl @ dq0
        self.u_init, self.du_init = Gs @ u0, gs @ du0
        self.rad = build_rad_weights(self.x, params.alpha, cfg.rad_tol) if cfg.radiation else None

    def zero_speed_guess(self):
        return SolverState(self.t, self.x, self.q_init.copy(), self.dq_init.copy(),
                           self.u_init.copy(), self.du_init.copy(), np.zeros_like(self.t))

    def apply(self, st: SolverState) -> SolverState:
        p = self.params
        Fq = -st.sdot[:, None] * st.dq
        Fu = st.sdot[:, None] * st.du
        if self.rad is not None:
            Fu = Fu - apply_radiation_truncated(st.u, self.rad, self.T_M, self.cfg.domain_R)
        PG, QG, Pd, Qd = self.liq
        q = self.q_init + _duhamel(Fq, PG, QG)
        dq = self.dq_init - _duhamel(Fq, Pd, Qd)
        PG, QG, Pd, Qd = self.sol
        u = self.u_init + _duhamel(Fu, PG, QG)
        du = self.du_init - _duhamel(Fu, Pd, Qd)
        q[:, [0, -1]] = 0.0
        u[:, [0, -1]] = 0.0
        sdot = (du[:, 0] + p.K * dq[:, 0]) / p.L
        return SolverState(self.t, self.x, q, dq, u, du, sdot)


def _window_for(data, length, cfg, params, T_M):
    return _Window(*data, length, cfg, params, T_M)


def apply_fixed_point_operator(state: SolverState, cfg: FixedPointConfig, params: NondimParams, T_M=None):
    """One application of the fixed-point map.

    The initial data are taken from row 0 of ``state``; the window length
    from ``state.t``.
    """
    T_M = params.T_M if T_M is None else T_M
    data = (state.q[0], state.dq[0], state.u[0], state.du[0])
    return _window_for(data, state.t[-1], cfg, params, T_M).apply(state)


def _picard(win: _Window, tol, max_iter):
    st = win.zero_speed_guess()
    diffs, ratios = [], []
    for _ in range(max_iter):
        new = win.apply(st)
        d = new.distance(st)
        if not np.isfinite(d):
            raise NonContractionError("iterate became non-finite", ratios)
        if diffs and diffs[-1] > 0:
            ratios.append(d / diffs[-1])
        diffs.append(d)
        st = new
        if d < tol:
            break
        if len(ratios) >= 3 and min(ratios[-3:]) >= 1.0:
            raise NonContractionError(
                f"difference ratio >= 1 in three consecutive iterations ({ratios[-3:]})", ratios)
    else:
        raise NonContractionError(f"no convergence to {tol} in {max_iter} iterations", ratios)
    residual = win.apply(st).distance(st)
    return st, diffs, ratios, residual


def _measured_factor(ratios):
    # early ratios are dominated by the guess; report the settled tail
    tail = ratios[-3:] if len(ratios) >= 3 else ratios
    return float(max(tail)) if tail else 0.0


def _data_norm(data):
    return float(max(np.abs(a).max() for a in data))


def _solve_window(data, cfg, params, T_M, tol):
    norm = _data_norm(data)
    tstar = compute_admissible_tstar(cfg, params, norm)
    length = cfg.window if cfg.window is not None else tstar
    win = _window_for(data, length, cfg, params, T_M)
    st, diffs, ratios, residual = _picard(win, tol, cfg.max_iter)
    diag = {"tstar": [tstar], "window": [length], "iterations": [len(diffs)],
            "contraction_factor": [_measured_factor(ratios)], "residual": [residual],
            "ratios": [ratios]}
    return st, diag


def solve_local(u0, cfg: FixedPointConfig, params: NondimParams, T_M=None):
    """Solve on one window [0, t_w].

    t_w is ``cfg.window`` if set, else the admissible t*. ``u0`` is a
    Profile or InitialSamples; the cut-off eta_R is applied when
    ``cfg.cutoff`` is set.
    """
    T_M = params.T_M if T_M is None else T_M
    data = fields_on_grid(u0, cfg.grid(), T_M, cfg.cutoff)
    st, diag = _solve_window(data, cfg, params, T_M, cfg.tol)
    return st.to_solution(T_M, **diag)


def continue_solution(sol: Solution, horizon, cfg: FixedPointConfig, params: NondimParams, T_M=None):
    """Extend ``sol`` to ``horizon`` by restarting from its terminal state.

    Restarts use automatic ball constants for the new data and tolerance
    ``cfg.tol * cfg.restart_tol_factor``; the cut-off is not reapplied.
    If t* falls below ``cfg.tstar_floor`` or more than ``cfg.max_windows``
    windows would be needed, the run stops and is flagged truncated.
    """
    T_M = sol.T_M if T_M is None else T_M
    rcfg = replace(cfg, C1=None, C2=None, C3=None)
    tol = cfg.tol * cfg.restart_tol_factor
    out = sol
    while out.horizon < horizon * (1 - 1e-12):
        data = (out.u_liquid[-1, ::-1].copy(), -out.du_liquid[-1, ::-1].copy(),
                out.u_solid[-1].copy(), out.du_solid[-1].copy())
        data[0][[0, -1]] = 0.0
        data[2][[0, -1]] = 0.0
        tstar = compute_admissible_tstar(rcfg, params, _data_norm(data))
        if tstar < cfg.tstar_floor:
            return replace(out, truncated=True, diagnostics=dict(out.diagnostics, stop="tstar below floor"))
        if len(out.diagnostics.get("window", [])) >= cfg.max_windows:
            return replace(out, truncated=True, diagnostics=dict(out.diagnostics, stop="max_windows reached"))
        length = min(cfg.window if cfg.window is not None else tstar, horizon - out.horizon)
        wcfg = replace(rcfg, window=length)
        st, diag = _solve_window(data, wcfg, params, T_M, tol)
        out = concatenate(out, st.to_solution(T_M, **diag))
    return out


def solve(u0, horizon, cfg: FixedPointConfig, params: NondimParams, T_M=None):
    """solve_local followed by continue_solution up to ``horizon``."""
    if cfg.window is not None and cfg.window > horizon:
        cfg = replace(cfg, window=horizon)
    return continue_solution(solve_local(u0, cfg, params, T_M), horizon, cfg, params, T_M)


# contraction probe ---------------------------------------------------------

def _profile(x, R, rng):
    """Random shape on [0, R], zero at both ends, steep near x = 0."""
    ell = rng.uniform(0.2, 2.0)
    f = np.tanh(x / ell) * (1 - (x / R) ** 4)
    df = (1 - np.tanh(x / ell) ** 2) / ell * (1 - (x / R) ** 4) - np.tanh(x / ell) * 4 * x**3 / R**4
    for m in range(1, 5):
        c = rng.normal() * 0.3 / m**2
        f = f + c * np.sin(m * np.pi * x / R)
        df = df + c * m * np.pi / R * np.cos(m * np.pi * x / R)
    return f, df


def _modulation(t, rng):
    T = max(t[-1], 1e-300)
    c0, c1 = rng.uniform(0.3, 1.0), rng.uniform(0.0, 1.0)
    w, ph = rng.uniform(0.0, 3 * np.pi) / T, rng.uniform(0, 2 * np.pi)
    m = c0 + c1 * np.cos(w * t + ph)
    return m / np.abs(m).max()


def _random_field(x, t, C, rng):
    f, df = _profile(x, x[-1], rng)
    m = _modulation(t, rng)
    f[[0, -1]] = 0.0
    v, dv = m[:, None] * f, m[:, None] * df
    scale = rng.uniform(0.5, 1.0) * C / max(np.abs(v).max(), np.abs(dv).max())
    sign = rng.choice([-1.0, 1.0])
    return sign * scale * v, sign * scale * dv


def random_ball_element(x, t, cfg: FixedPointConfig, rng):
    """Random smooth element of the ball with q(0) = u(0) = 0 and x-derivatives consistent."""
    q, dq = _random_field(x, t, cfg.C1, rng)
    u, du = _random_field(x, t, cfg.C2, rng)
    sdot = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0) * cfg.C3 * _modulation(t, rng)
    return SolverState(t, x, q, dq, u, du, sdot)


def _partner(a: SolverState, cfg, rng):
    """Second point of a pair: one block (or all) redrawn."""
    b = random_ball_element(a.x, a.t, cfg, rng)
    mode = rng.choice(["all", "liquid", "solid", "speed"])
    if mode == "all":
        return b
    out = replace(a)
    if mode == "liquid":
        out.q, out.dq = b.q, b.dq
    elif mode == "solid":
        out.u, out.du = b.u, b.du
    else:
        out.sdot = b.sdot
    return out


@dataclass
class ContractionEstimate:
    factor: float
    window: float
    ratios: list = field(default_factory=list)


def estimate_contraction_factor(cfg: FixedPointConfig, params: NondimParams, T_M=None, n_samples=20,
                                seed=0, window=None, return_details=False):
    """Largest ||L a - L b|| / ||a - b|| over random pairs in the ball.

    The map is affine in the data, so the ratio does not depend on u0 and
    zero data are used. Pairs share all but a randomly chosen block of
    components (or none). The window is ``window``, else ``cfg.window``,
    else t* for the ball constants in ``cfg`` (which must all be set).
    """
    T_M = params.T_M if T_M is None else T_M
    if None in (cfg.C1, cfg.C2, cfg.C3):
        raise BallError("estimate_contraction_factor needs explicit C1, C2, C3")
    if window is None:
        window = cfg.window if cfg.window is not None else compute_admissible_tstar(cfg, params, 0.0)
    zero = np.zeros(cfg.n_space + 1)
    win = _window_for((zero,) * 4, window, cfg, params, T_M)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n_samples):
        a = random_ball_element(win.x, win.t, cfg, rng)
        b = _partner(a, cfg, rng)
        den = a.distance(b)
        if den == 0:
            continue
        ratios.append(win.apply(a).distance(win.apply(b)) / den)
    est = ContractionEstimate(float(max(ratios)), float(window), ratios)
    return est if return_details else est.factor
