"""Initial temperature profiles and their sampled form.

Profiles are given in the front-fixed frame: liquid on y < 0, solid on
y > 0, T(0) = T_M.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class InitialSamples:
    """Sampled initial temperature with one-sided derivatives.

    ``y_liquid`` ascends from -R to 0, ``y_solid`` from 0 to R.
    """

    y_liquid: np.ndarray
    T_liquid: np.ndarray
    dT_liquid: np.ndarray
    y_solid: np.ndarray
    T_solid: np.ndarray
    dT_solid: np.ndarray
    T_M: float

    @property
    def u_liquid(self):
        return self.T_liquid - self.T_M

    @property
    def u_solid(self):
        return self.T_solid - self.T_M

    def norm1(self):
        """max of sup|u0| and the one-sided sup|u0'| on both half-lines."""
        return float(max(np.abs(self.u_liquid).max(), np.abs(self.u_solid).max(),
                         np.abs(self.dT_liquid).max(), np.abs(self.dT_solid).max()))

    def sampling_radius(self):
        return float(max(-self.y_liquid[0], self.y_solid[-1]))


class Profile:
    """Base class: subclasses define the four one-sided functions."""

    T_M = 0.0

    def T_liquid(self, y):
        raise NotImplementedError

    def dT_liquid(self, y):
        raise NotImplementedError

    def T_solid(self, y):
        raise NotImplementedError

    def dT_solid(self, y):
        raise NotImplementedError

    def sample(self, y_liquid, y_solid) -> InitialSamples:
        y_liquid = np.asarray(y_liquid, dtype=float)
        y_solid = np.asarray(y_solid, dtype=float)
        return InitialSamples(
            y_liquid=y_liquid,
            T_liquid=np.asarray(self.T_liquid(y_liquid), dtype=float),
            dT_liquid=np.asarray(self.dT_liquid(y_liquid), dtype=float),
            y_solid=y_solid,
            T_solid=np.asarray(self.T_solid(y_solid), dtype=float),
            dT_solid=np.asarray(self.dT_solid(y_solid), dtype=float),
            T_M=float(self.T_M),
        )

    def sample_uniform(self, R, n):
        x = np.linspace(0.0, R, n + 1)
        return self.sample(-x[::-1], x)


class ExponentialProfile(Profile):
    """Exponential approach to constant far fields.

    T = T_M + a (1 - exp(y / l_liquid)) for y < 0 and
    T = b + (T_M - b) exp(-y / l_solid) for y > 0.
    sup of the liquid side is T_M + a, inf of the solid side is b.
    """

    def __init__(self, T_M, a, l_liquid, b, l_solid):
        if not (a >= 0 and l_liquid > 0 and l_solid > 0 and 0 <= b <= T_M):
            raise ValueError("need a >= 0, lengths > 0 and 0 <= b <= T_M")
        self.T_M, self.a, self.l_liquid, self.b, self.l_solid = T_M, a, l_liquid, b, l_solid

    def T_liquid(self, y):
        return self.T_M + self.a * (1.0 - np.exp(np.asarray(y) / self.l_liquid))

    def dT_liquid(self, y):
        return -self.a / self.l_liquid * np.exp(np.asarray(y) / self.l_liquid)

    def T_solid(self, y):
        return self.b + (self.T_M - self.b) * np.exp(-np.asarray(y) / self.l_solid)

    def dT_solid(self, y):
        return -(self.T_M - self.b) / self.l_solid * np.exp(-np.asarray(y) / self.l_solid)


class NeumannProfile(Profile):
    """Similarity profile at time t0, shifted so the front sits at y = 0."""

    def __init__(self, oracle, t0):
        if not t0 > 0:
            raise ValueError("t0 must be > 0")
        self.oracle, self.t0 = oracle, t0
        self.T_M = oracle.T_M
        self.s0 = oracle.front(t0)

    def T_liquid(self, y):
        return self.oracle.temperature(self.t0, np.asarray(y) + self.s0)

    def dT_liquid(self, y):
        return self.oracle.gradient(self.t0, np.asarray(y) + self.s0, side="liquid")

    def T_solid(self, y):
        return self.oracle.temperature(self.t0, np.asarray(y) + self.s0)

    def dT_solid(self, y):
        return self.oracle.gradient(self.t0, np.asarray(y) + self.s0, side="solid")


class TableProfile(Profile):
    """Tabulated (y, T) pairs with linear interpolation.

    Derivatives are the second-order finite differences of the table on
    each half-line separately, then interpolated.
    """

    def __init__(self, y, T, T_M):
        y = np.asarray(y, dtype=float)
        T = np.asarray(T, dtype=float)
        if y.ndim != 1 or y.shape != T.shape or np.any(np.diff(y) <= 0):
            raise ValueError("table needs strictly increasing y and matching T")
        if not (y[0] < 0 < y[-1]) or not np.any(y == 0):
            raise ValueError("table must contain y = 0 and points on both sides")
        self.T_M = float(T_M)
        k = int(np.flatnonzero(y == 0)[0])
        self._liq = (y[: k + 1], T[: k + 1])
        self._sol = (y[k:], T[k:])
        self._dliq = np.gradient(T[: k + 1], y[: k + 1], edge_order=2) if k >= 2 else np.diff(T[: k + 1]) / np.diff(y[: k + 1])
        self._dsol = np.gradient(T[k:], y[k:], edge_order=2) if y.size - k >= 3 else np.diff(T[k:]) / np.diff(y[k:])

    @classmethod
    def from_file(cls, path, T_M):
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return cls(data[:, 0], data[:, 1], T_M)

    @staticmethod
    def _interp(y, xs, vs):
        if vs.size == 1:
            return np.full_like(np.asarray(y, dtype=float), vs[0])
        if vs.size == xs.size - 1:  # one slope per cell
            xs = 0.5 * (xs[1:] + xs[:-1]) if xs.size > 2 else xs[:1]
        return np.interp(y, xs, vs)

    def T_liquid(self, y):
        return np.interp(y, *self._liq)

    def dT_liquid(self, y):
        return self._interp(y, self._liq[0], self._dliq)

    def T_solid(self, y):
        return np.interp(y, *self._sol)

    def dT_solid(self, y):
        return self._interp(y, self._sol[0], self._dsol)


def cutoff_eta(y, R):
    """C^2 cut-off: 1 for |y| <= R - 1, 0 for |y| >= R, quintic smoothstep between.

    The slope is at most 15/8 < 2.
    """
    x = np.clip(np.abs(np.asarray(y, dtype=float)) - (R - 1.0), 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def cutoff_deta(y, R):
    y = np.asarray(y, dtype=float)
    x = np.clip(np.abs(y) - (R - 1.0), 0.0, 1.0)
    return -np.sign(y) * 30.0 * x**2 * (1.0 - x) ** 2


def apply_cutoff(samples: InitialSamples, R) -> InitialSamples:
    """Return u0 * eta_R (as temperatures) with the product-rule derivative."""
    out = []
    for y, T, dT in ((samples.y_liquid, samples.T_liquid, samples.dT_liquid),
                     (samples.y_solid, samples.T_solid, samples.dT_solid)):
        u = T - samples.T_M
        eta, deta = cutoff_eta(y, R), cutoff_deta(y, R)
        out.append((y, samples.T_M + u * eta, dT * eta + u * deta))
    (yl, Tl, dl), (ys, Ts, ds) = out
    return InitialSamples(yl, Tl, dl, ys, Ts, ds, samples.T_M)


def fields_on_grid(T0, x, T_M, cutoff=True):
    """Shifted data on nodes x in [0, R] for both phases, liquid mirrored.

    Returns (q, dq, u, du) with q(x) = u1(-x), so dq(x) = -u1'(-x). A
    Profile is sampled exactly, InitialSamples are interpolated linearly.
    With ``cutoff`` the data are multiplied by eta_R, R = x[-1].
    """
    x = np.asarray(x, dtype=float)
    if isinstance(T0, InitialSamples):
        q = np.interp(-x, T0.y_liquid, T0.u_liquid)
        dq = -np.interp(-x, T0.y_liquid, T0.dT_liquid)
        u = np.interp(x, T0.y_solid, T0.u_solid)
        du = np.interp(x, T0.y_solid, T0.dT_solid)
    else:
        q = np.asarray(T0.T_liquid(-x), dtype=float) - T_M
        dq = -np.asarray(T0.dT_liquid(-x), dtype=float)
        u = np.asarray(T0.T_solid(x), dtype=float) - T_M
        du = np.asarray(T0.dT_solid(x), dtype=float)
    if cutoff:
        R = x[-1]
        eta, deta = cutoff_eta(x, R), cutoff_deta(x, R)
        q, dq = q * eta, dq * eta + q * deta
        u, du = u * eta, du * eta + u * deta
    q[0] = u[0] = 0.0
    if cutoff:
        q[-1] = u[-1] = 0.0
    return q, dq, u, du
