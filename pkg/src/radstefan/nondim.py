"""Reduction of the physical system to non-dimensional form and back.

With rate = 4 pi sigma alpha the reduced variables are

    tau = (rate / C_S) t,  xi = sqrt(rate / K_S) x,  alpha~ = sqrt(K_S / rate) alpha

so that C_S = K_S = 4 pi sigma alpha = 1. Temperatures are not rescaled.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .solution import Solution


def _check_positive(obj, names):
    bad = [n for n in names if not getattr(obj, n) > 0]
    if bad:
        raise ValueError(f"must be > 0: {', '.join(bad)}")


@dataclass(frozen=True)
class PhysicalParams:
    C_S: float
    C_L: float
    K_S: float
    K_L: float
    alpha_abs: float
    sigma: float
    L_latent: float
    T_M: float

    def __post_init__(self):
        _check_positive(self, ["C_S", "C_L", "K_S", "K_L", "alpha_abs", "sigma", "L_latent", "T_M"])


@dataclass(frozen=True)
class NondimParams:
    """Reduced parameters; ``kappa`` is derived as K / C."""

    K: float
    C: float
    L: float
    alpha: float
    T_M: float
    kappa: float = field(init=False)

    def __post_init__(self):
        for n in ("K", "C", "L", "alpha"):
            if not getattr(self, n) > 0:
                raise ValueError(f"{n} must be > 0")
        if not self.T_M >= 0:
            raise ValueError("T_M must be >= 0")
        object.__setattr__(self, "kappa", self.K / self.C)

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class ScaleFactors:
    """Multipliers taking physical to reduced variables.

    tau = time * t, xi = length * x, T~ = temperature * T. The reference
    C_S, K_S, sigma are kept so the parameters can be reconstructed.
    """

    time: float
    length: float
    temperature: float
    C_S: float
    K_S: float
    sigma: float

    @property
    def rate(self):
        return self.time * self.C_S

    @property
    def speed(self):
        # physical sdot = speed * d s~/d tau
        return self.time / self.length

    def check(self):
        if not np.isclose(self.length**2 * self.K_S, self.time * self.C_S, rtol=1e-12, atol=0):
            raise ValueError("inconsistent scale factors: length^2 K_S != time C_S")
        if self.temperature != 1.0:
            raise ValueError("this reduction does not rescale temperature")


def nondimensionalize(p: PhysicalParams):
    """Return (NondimParams, ScaleFactors) for physical parameters ``p``."""
    rate = 4.0 * np.pi * p.sigma * p.alpha_abs
    a_t = rate / p.C_S
    a_x = np.sqrt(rate / p.K_S)
    n = NondimParams(
        K=p.K_L / p.K_S,
        C=p.C_L / p.C_S,
        L=p.L_latent / p.C_S,
        alpha=p.alpha_abs / a_x,
        T_M=p.T_M,
    )
    return n, ScaleFactors(time=a_t, length=a_x, temperature=1.0, C_S=p.C_S, K_S=p.K_S, sigma=p.sigma)


def physical_params(n: NondimParams, sc: ScaleFactors) -> PhysicalParams:
    """Inverse of nondimensionalize on the parameter block."""
    sc.check()
    alpha_abs = n.alpha * sc.length
    if not np.isclose(4.0 * np.pi * sc.sigma * alpha_abs, sc.rate, rtol=1e-12, atol=0):
        raise ValueError("scale factors do not match the reduced absorption coefficient")
    return PhysicalParams(
        C_S=sc.C_S,
        C_L=n.C * sc.C_S,
        K_S=sc.K_S,
        K_L=n.K * sc.K_S,
        alpha_abs=alpha_abs,
        sigma=sc.sigma,
        L_latent=n.L * sc.C_S,
        T_M=n.T_M,
    )


def redimensionalize(n: NondimParams, sc: ScaleFactors, sol: Solution) -> Solution:
    """Map a reduced-variable solution to physical time, length and speed."""
    physical_params(n, sc)  # raises on mismatched scales
    if not np.isclose(sol.T_M, n.T_M, rtol=1e-14, atol=0):
        raise ValueError("solution and parameters disagree on T_M")
    return replace(
        sol,
        t=sol.t / sc.time,
        s=sol.s / sc.length,
        sdot=sol.sdot * sc.speed,
        snap_t=sol.snap_t / sc.time,
        y_liquid=sol.y_liquid / sc.length,
        y_solid=sol.y_solid / sc.length,
        du_liquid=sol.du_liquid * sc.length,
        du_solid=sol.du_solid * sc.length,
        diagnostics=dict(sol.diagnostics, units="physical"),
    )


def _front_lookup(front_t, front_s):
    front_t = np.asarray(front_t, dtype=float)
    front_s = np.asarray(front_s, dtype=float)
    if front_t.ndim != 1 or front_t.shape != front_s.shape or np.any(np.diff(front_t) <= 0):
        raise ValueError("front history must be an increasing time series")

    def s_of(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < front_t[0] - 1e-14) or np.any(t > front_t[-1] + 1e-14):
            raise ValueError("requested time outside the front history")
        return np.interp(t, front_t, front_s)

    return s_of


def front_frame_shift(field, front_t, front_s, inverse=False):
    """Change frame between lab coordinates x and front coordinates y = x - s(t).

    Parameters
    ----------
    field : callable
        ``field(t, x)`` in the lab frame (or ``field(t, y)`` if inverse).
    front_t, front_s : array_like
        Front history, linearly interpolated.
    inverse : bool
        Map from the front frame back to the lab frame.

    Returns
    -------
    callable
        The field in the other frame.
    """
    s_of = _front_lookup(front_t, front_s)
    sign = -1.0 if inverse else 1.0

    def shifted(t, coord):
        return field(t, np.asarray(coord, dtype=float) + sign * s_of(t))

    return shifted


def shift_samples(x, values, t, front_t, front_s, y):
    """Resample lab-frame snapshots ``values[k, :]`` on ``x`` to front-frame nodes ``y``.

    Points falling outside ``x`` are filled with the nearest end value.
    """
    s_of = _front_lookup(front_t, front_s)
    values = np.atleast_2d(values)
    out = np.empty((values.shape[0], np.size(y)))
    for k, tk in enumerate(np.atleast_1d(t)):
        out[k] = np.interp(np.asarray(y) + s_of(tk), x, values[k])
    return out
