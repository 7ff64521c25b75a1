"""Trajectory container shared by both solvers."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Solution:
    """Front history plus temperature snapshots in the front-fixed frame.

    Fields are stored shifted, u = T - T_M, with spatial derivatives kept
    alongside. The liquid grid runs from -R up to 0, the solid grid from 0
    to R; index 0 of the solid grid and index -1 of the liquid grid are
    the interface.

    Attributes
    ----------
    t, s, sdot : ndarray
        Front history; s is the trapezoid integral of sdot with s[0] = 0.
    snap_t : ndarray
        Times of the stored snapshots (subset of ``t``).
    y_liquid, y_solid : ndarray
        Node coordinates.
    u_liquid, u_solid : ndarray
        Shape (len(snap_t), n) shifted temperatures.
    du_liquid, du_solid : ndarray
        Matching spatial derivatives.
    T_M : float
        Melting temperature.
    method : str
        ``"fixedpoint"`` or ``"fd"``.
    truncated : bool
        True if the run stopped before its requested horizon.
    diagnostics : dict
        Solver-specific numbers (iterations, contraction factors, ...).
    """

    t: np.ndarray
    s: np.ndarray
    sdot: np.ndarray
    snap_t: np.ndarray
    y_liquid: np.ndarray
    y_solid: np.ndarray
    u_liquid: np.ndarray
    u_solid: np.ndarray
    du_liquid: np.ndarray
    du_solid: np.ndarray
    T_M: float
    method: str = ""
    truncated: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def T_liquid(self):
        return self.u_liquid + self.T_M

    @property
    def T_solid(self):
        return self.u_solid + self.T_M

    @property
    def horizon(self):
        return float(self.t[-1])

    def front_at(self, t):
        return np.interp(t, self.t, self.s)

    def snapshot_index(self, t):
        return int(np.argmin(np.abs(self.snap_t - t)))


def front_from_speed(t, sdot):
    """s(t) = int_0^t sdot by the trapezoid rule."""
    t = np.asarray(t, dtype=float)
    sdot = np.asarray(sdot, dtype=float)
    s = np.zeros_like(t)
    if t.size > 1:
        s[1:] = np.cumsum(0.5 * (sdot[1:] + sdot[:-1]) * np.diff(t))
    return s


def concatenate(first: Solution, second: Solution) -> Solution:
    """Glue a continuation onto a solution; second starts where first ends."""
    off_t = first.t[-1]
    off_s = first.s[-1]
    diag = dict(first.diagnostics)
    for k, v in second.diagnostics.items():
        if isinstance(v, list) and isinstance(diag.get(k), list):
            diag[k] = diag[k] + v
        else:
            diag[k] = v
    return Solution(
        t=np.concatenate([first.t, off_t + second.t[1:]]),
        s=np.concatenate([first.s, off_s + second.s[1:]]),
        sdot=np.concatenate([first.sdot, second.sdot[1:]]),
        snap_t=np.concatenate([first.snap_t, off_t + second.snap_t[1:]]),
        y_liquid=first.y_liquid,
        y_solid=first.y_solid,
        u_liquid=np.concatenate([first.u_liquid, second.u_liquid[1:]]),
        u_solid=np.concatenate([first.u_solid, second.u_solid[1:]]),
        du_liquid=np.concatenate([first.du_liquid, second.du_liquid[1:]]),
        du_solid=np.concatenate([first.du_solid, second.du_solid[1:]]),
        T_M=first.T_M,
        method=first.method,
        truncated=second.truncated,
        diagnostics=diag,
    )
