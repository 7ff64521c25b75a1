"""Front-fixing finite differences and the Neumann similarity solution.

The FD solver works on the same bounded problem as the fixed-point solver:
shifted temperatures u = T - T_M on [-R, 0] and [0, R], u = 0 at y = 0 and
y = +-R, initial data u0 * eta_R and the radiation integral restricted to
[0, R]. The liquid is stored mirrored, q(x) = u1(-x), so both phases share
one node vector x on [0, R]:

    dq/dt = kappa q'' - sdot q'
    du/dt = u'' + sdot u' - I^R[u + T_M]
    L sdot = u'(0) + K q'(0)

Diffusion is implicit, transport and radiation explicit (IMEX Euler for the
first step, SBDF2 afterwards), with sdot lagged from the Stefan condition.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import bisect
from scipy.special import erfc, erfcx

from .initial_data import fields_on_grid
from .nondim import NondimParams
from .radop import apply_radiation_truncated, build_rad_weights
from .solution import Solution, front_from_speed


class CFLError(RuntimeError):
    """Explicit terms too stiff for the requested step."""

    def __init__(self, msg, admissible_dt):
        super().__init__(f"{msg}; admissible dt = {admissible_dt:.3e}")
        self.admissible_dt = admissible_dt


class BracketError(ValueError):
    """The similarity balance has no sign change for the given far fields."""


# ---------------------------------------------------------------------------
# Neumann similarity oracle


@dataclass(frozen=True)
class NeumannSimilarity:
    """Two-phase similarity solution with the radiation switched off.

    Liquid occupies x < s(t) = 2 lam sqrt(t) at far-field temperature
    ``T_L``, the solid x > s(t) at ``T_S``.
    """

    lam: float
    T_L: float
    T_S: float
    T_M: float
    K: float
    kappa: float
    L: float

    def front(self, t):
        return 2.0 * self.lam * np.sqrt(t)

    def front_shifted(self, t, t0):
        """Front displacement after starting from the profile at time t0."""
        return 2.0 * self.lam * (np.sqrt(t0 + np.asarray(t, dtype=float)) - np.sqrt(t0))

    def speed(self, t):
        return self.lam / np.sqrt(t)

    def temperature(self, t, x):
        x = np.asarray(x, dtype=float)
        eta = x / (2.0 * np.sqrt(t))
        rk = np.sqrt(self.kappa)
        with np.errstate(over="ignore", invalid="ignore"):
            liq = self.T_L - (self.T_L - self.T_M) * erfc(-eta / rk) / erfc(-self.lam / rk)
            sol = self.T_S + (self.T_M - self.T_S) * erfc(eta) / erfc(self.lam)
        out = np.where(x < self.front(t), liq, sol)
        return out if out.ndim else float(out)

    def gradient(self, t, x, side=None):
        """dT/dx; ``side`` picks the branch at the front ("liquid" or "solid")."""
        x = np.asarray(x, dtype=float)
        eta = x / (2.0 * np.sqrt(t))
        rk = np.sqrt(self.kappa)
        c = 1.0 / np.sqrt(np.pi * t)
        liq = -(self.T_L - self.T_M) * c / rk * np.exp(-(eta / rk) ** 2) / erfc(-self.lam / rk)
        sol = -(self.T_M - self.T_S) * c * np.exp(-eta**2) / erfc(self.lam)
        s = self.front(t)
        if side == "liquid":
            pick = np.ones(x.shape, dtype=bool)
        elif side == "solid":
            pick = np.zeros(x.shape, dtype=bool)
        else:
            pick = x < s
        out = np.where(pick, liq, sol)
        return out if out.ndim else float(out)

    def balance(self, lam):
        return _balance(lam, self.K, self.kappa, self.L, self.T_L, self.T_S, self.T_M)


def _balance(lam, K, kappa, L, T_L, T_S, T_M):
    # flux in from the liquid minus flux out into the solid minus latent heat, times sqrt(pi t)
    rk = np.sqrt(kappa)
    return K * (T_L - T_M) / (rk * erfcx(-lam / rk)) - (T_M - T_S) / erfcx(lam) - L * lam * np.sqrt(np.pi)


def neumann_similarity_oracle(params: NondimParams, far_field_liquid, far_field_solid, T_M=None, xtol=1e-12):
    """Solve the similarity balance for lam by bisection.

    Returns
    -------
    NeumannSimilarity
        Carries ``lam`` and evaluates the front and both temperature profiles.

    Raises
    ------
    BracketError
        If the far fields are not ordered T_L >= T_M >= T_S >= 0 with T_L > T_S.
    """
    T_M = params.T_M if T_M is None else T_M
    T_L, T_S = float(far_field_liquid), float(far_field_solid)
    if not (T_L >= T_M >= T_S >= 0 and T_L > T_S):
        raise BracketError(f"need T_L >= T_M >= T_S >= 0 with T_L > T_S, got {T_L}, {T_M}, {T_S}")
    f = lambda lam: _balance(lam, params.K, params.kappa, params.L, T_L, T_S, T_M)
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if f(lo) > 0:
            break
        lo *= 2
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 2
    if not (f(lo) > 0 > f(hi)):
        raise BracketError("could not bracket the similarity balance")
    lam = bisect(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=400)
    return NeumannSimilarity(lam=float(lam), T_L=T_L, T_S=T_S, T_M=float(T_M), K=params.K,
                             kappa=params.kappa, L=params.L)


# ---------------------------------------------------------------------------
# grid and stencils


@dataclass(frozen=True)
class FDGrid:
    """Nodes x on [0, R] shared by both phases (liquid at y = -x).

    x_i = R (exp(beta i / n) - 1) / (exp(beta) - 1); beta = 0 is uniform.
    """

    R: float
    n: int
    beta: float = 3.0
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.R > 0 and self.n >= 3 and self.beta >= 0):
            raise ValueError("need R > 0, n >= 3 and beta >= 0")
        i = np.arange(self.n + 1) / self.n
        x = self.R * i if self.beta == 0 else self.R * np.expm1(self.beta * i) / np.expm1(self.beta)
        x[0], x[-1] = 0.0, self.R
        h = np.diff(x)
        if np.any(h <= 0) or np.any(np.diff(h) < -1e-12 * h[1:]):
            raise ValueError("spacing must be positive and non-decreasing away from y = 0")
        object.__setattr__(self, "x", x)

    @property
    def h(self):
        return np.diff(self.x)

    @property
    def y_liquid(self):
        return -self.x[::-1]

    @property
    def y_solid(self):
        return self.x

    def refined(self, factor=2):
        return FDGrid(self.R, self.n * factor, self.beta)


def _stencils(x):
    """Three-point D1 and D2 coefficients (lower, diag, upper) on interior nodes."""
    hm = np.diff(x)[:-1]
    hp = np.diff(x)[1:]
    s = hm + hp
    d1 = (-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s))
    d2 = (2 / (hm * s), -2 / (hm * hp), 2 / (hp * s))
    return d1, d2


def _apply3(coef, v):
    lo, di, up = coef
    out = np.zeros_like(v)
    out[..., 1:-1] = lo * v[..., :-2] + di * v[..., 1:-1] + up * v[..., 2:]
    return out


def end_derivatives(x, v):
    """One-sided second-order derivatives at x[0] and x[-1]."""
    h1, h2 = x[1] - x[0], x[2] - x[1]
    left = (-(2 * h1 + h2) / (h1 * (h1 + h2)) * v[..., 0] + (h1 + h2) / (h1 * h2) * v[..., 1]
            - h1 / (h2 * (h1 + h2)) * v[..., 2])
    g1, g2 = x[-1] - x[-2], x[-2] - x[-3]
    right = ((2 * g1 + g2) / (g1 * (g1 + g2)) * v[..., -1] - (g1 + g2) / (g1 * g2) * v[..., -2]
             + g1 / (g2 * (g1 + g2)) * v[..., -3])
    return left, right


def derivative(x, v):
    """Second-order dv/dx at every node."""
    d1, _ = _stencils(x)
    out = _apply3(d1, v)
    out[..., 0], out[..., -1] = end_derivatives(x, v)
    return out


def stefan_speed(x, q, u, params: NondimParams):
    """sdot = (u'(0) + K q'(0)) / L from one-sided three-point stencils."""
    return (end_derivatives(x, u)[0] + params.K * end_derivatives(x, q)[0]) / params.L


def _trapz(x, v):
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(x)))


# ---------------------------------------------------------------------------
# stepping


@dataclass
class FDState:
    """Mirrored liquid q, solid u, both on ``grid.x``; ``prev`` feeds SBDF2."""

    grid: FDGrid
    t: float
    s: float
    q: np.ndarray
    u: np.ndarray
    sdot: float
    prev: tuple = None  # (q, u, Eq, Eu) at the previous step


def _explicit(state, params, T_M, rad, sdot):
    x = state.grid.x
    d1, _ = _stencils(x)
    Eq = -sdot * _apply3(d1, state.q)
    Eu = sdot * _apply3(d1, state.u)
    I = np.zeros_like(state.u)
    if rad is not None:
        I = apply_radiation_truncated(state.u, rad, T_M, state.grid.R)
        Eu[1:-1] -= I[1:-1]
    return Eq, Eu, I


def admissible_dt(state, params, T_M, rad=None, cfl=1.0):
    """Largest step the explicit transport and radiation terms tolerate."""
    x = state.grid.x
    a = abs(state.sdot)
    lim = np.inf
    if a > 0:
        lim = min(np.min(np.diff(x)) / a, 2 * min(1.0, params.kappa) / a**2)
    if rad is not None:
        Tmax = float(np.max(np.abs(state.u + T_M)))
        if Tmax > 0:
            # Lipschitz constant of T -> T^4 - W T^4 is at most 8 Tmax^3
            lim = min(lim, 1.0 / (8 * Tmax**3))
    return cfl * lim


def _banded(coef, diff, dt, gamma):
    """(gamma I - dt diff D2) in solve_banded layout with Dirichlet end rows."""
    lo, di, up = coef
    n = di.size + 2
    ab = np.zeros((3, n))
    ab[1, :] = 1.0
    ab[1, 1:-1] = gamma - dt * diff * di
    ab[0, 2:] = -dt * diff * up
    ab[2, :-2] = -dt * diff * lo
    return ab


def step_front_fixed(state: FDState, dt, params: NondimParams, T_M, rad_weights=None, fixed_sdot=None,
                     order=2, cfl=1.0):
    """Advance one step.

    Parameters
    ----------
    state : FDState
        Current state; u = q = 0 at both ends.
    rad_weights : RadKernelWeights or None
        Weights on ``state.grid.x``; None switches radiation off.
    fixed_sdot : float, optional
        Pin the front speed instead of evaluating the Stefan condition.
    order : {1, 2}
        IMEX Euler or SBDF2 (first step always Euler).

    Raises
    ------
    CFLError
        If dt exceeds the explicit-term limit.
    """
    x = state.grid.x
    sdot = state.sdot if fixed_sdot is None else float(fixed_sdot)
    state = replace(state, sdot=sdot)
    lim = admissible_dt(state, params, T_M, rad_weights, cfl)
    if dt > lim:
        raise CFLError(f"dt = {dt:.3e} too large at t = {state.t:.4g}", lim)
    Eq, Eu, I = _explicit(state, params, T_M, rad_weights, sdot)
    _, d2 = _stencils(x)
    if order == 2 and state.prev is not None:
        qp, up, Eqp, Eup = state.prev
        gamma = 1.5
        rq = 2 * state.q - 0.5 * qp + dt * (2 * Eq - Eqp)
        ru = 2 * state.u - 0.5 * up + dt * (2 * Eu - Eup)
    else:
        gamma = 1.0
        rq = state.q + dt * Eq
        ru = state.u + dt * Eu
    rq[0] = rq[-1] = ru[0] = ru[-1] = 0.0
    q = solve_banded((1, 1), _banded(d2, params.kappa, dt, gamma), rq)
    u = solve_banded((1, 1), _banded(d2, 1.0, dt, gamma), ru)
    q[[0, -1]] = u[[0, -1]] = 0.0  # exact Dirichlet values despite solver rounding
    new_sdot = stefan_speed(x, q, u, params) if fixed_sdot is None else sdot
    s = state.s + 0.5 * dt * (sdot + new_sdot)
    return FDState(grid=state.grid, t=state.t + dt, s=s, q=q, u=u, sdot=float(new_sdot),
                   prev=(state.q, state.u, Eq, Eu))


def enthalpy(state: FDState, params: NondimParams, T_M):
    """int C T over the liquid + int T over the solid + L s."""
    x = state.grid.x
    return params.C * _trapz(x, state.q + T_M) + _trapz(x, state.u + T_M) + params.L * state.s


def enthalpy_flux(state: FDState, params: NondimParams, T_M, I=None):
    """d/dt of ``enthalpy``: end fluxes, transport through the ends, radiation sink."""
    x = state.grid.x
    qR = end_derivatives(x, state.q)[1]
    uR = end_derivatives(x, state.u)[1]
    out = params.K * qR + uR
    out += state.sdot * (params.C * (T_M - (state.q[-1] + T_M)) + state.u[-1])
    if I is not None:
        out -= _trapz(x, I)
    return float(out)


# ---------------------------------------------------------------------------
# driver


@dataclass
class FDConfig:
    R: float = 8.0
    n: int = 200
    beta: float = 3.0
    dt: float = 1e-3
    order: int = 2
    n_snapshots: int = 50
    cfl: float = 1.0
    radiation: bool = True
    rad_tol: float = 1e-12
    cutoff: bool = True

    def grid(self):
        return FDGrid(self.R, self.n, self.beta)


def initial_state(T0, grid: FDGrid, T_M, cutoff=True):
    """Mirrored liquid and solid values on the grid, zero at both ends."""
    q, _, u, _ = fields_on_grid(T0, grid.x, T_M, cutoff)
    q[-1] = u[-1] = 0.0
    return q, u


def solve_fd(T0, params: NondimParams, T_M=None, horizon=1.0, cfg: FDConfig = None, fixed_sdot=None):
    """Integrate the bounded front-fixed problem to ``horizon``.

    ``T0`` is a Profile or InitialSamples in temperature units. Returns a
    Solution on the same node layout as the fixed-point solver.
    """
    cfg = FDConfig() if cfg is None else cfg
    T_M = params.T_M if T_M is None else T_M
    grid = cfg.grid()
    q, u = initial_state(T0, grid, T_M, cfg.cutoff)
    rad = build_rad_weights(grid.x, params.alpha, cfg.rad_tol) if cfg.radiation else None
    n_steps = max(1, int(np.ceil(horizon / cfg.dt - 1e-9)))
    dt = horizon / n_steps
    sdot0 = stefan_speed(grid.x, q, u, params) if fixed_sdot is None else float(fixed_sdot)
    state = FDState(grid=grid, t=0.0, s=0.0, q=q, u=u, sdot=float(sdot0))

    snap_idx = set(np.unique(np.linspace(0, n_steps, min(cfg.n_snapshots, n_steps) + 1).round().astype(int)))
    t = np.empty(n_steps + 1)
    sdot = np.empty(n_steps + 1)
    energy = np.empty(n_steps + 1)
    flux = np.empty(n_steps + 1)
    snaps_t, snaps_q, snaps_u = [], [], []

    def record(k, st):
        t[k], sdot[k] = st.t, st.sdot
        energy[k] = enthalpy(st, params, T_M)
        I = apply_radiation_truncated(st.u, rad, T_M, grid.R) if rad is not None else None
        flux[k] = enthalpy_flux(st, params, T_M, I)
        if k in snap_idx:
            snaps_t.append(st.t)
            snaps_q.append(st.q.copy())
            snaps_u.append(st.u.copy())

    record(0, state)
    for k in range(1, n_steps + 1):
        state = step_front_fixed(state, dt, params, T_M, rad, fixed_sdot, cfg.order, cfg.cfl)
        record(k, state)

    x = grid.x
    Q, U = np.array(snaps_q), np.array(snaps_u)
    s = front_from_speed(t, sdot)
    budget = energy - energy[0] - front_from_speed(t, flux)
    return Solution(
        t=t, s=s, sdot=sdot, snap_t=np.array(snaps_t),
        y_liquid=grid.y_liquid, y_solid=grid.y_solid,
        u_liquid=Q[:, ::-1], u_solid=U,
        du_liquid=-derivative(x, Q)[:, ::-1], du_solid=derivative(x, U),
        T_M=float(T_M), method="fd",
        diagnostics={"dt": dt, "n_steps": n_steps, "n": grid.n, "R": grid.R, "beta": grid.beta,
                     "order": cfg.order, "energy": energy, "energy_flux": flux, "energy_residual": budget},
    )
