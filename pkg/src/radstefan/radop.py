"""Non-local grey radiation operator in the solid.

I[T](y) = T^4(y) - int_0^inf (alpha/2) E1(alpha |y - eta|) T^4(eta) d eta

The kernel integral is done by product integration: T^4 is sampled at the
nodes, interpolated linearly, and integrated exactly against the kernel
using closed-form moments of E1 on each cell. This handles the log
singularity at eta = y without special casing.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._backend import kernels
from .specfun import e1_moment0, exp_integral_e1


@dataclass(frozen=True)
class RadKernelWeights:
    """Product-integration weights of the E1 kernel on a grid.

    Attributes
    ----------
    grid : ndarray
        Strictly increasing nodes on [0, R].
    alpha : float
        Reduced absorption coefficient.
    weights : ndarray
        W[i, j] = int (alpha/2) E1(alpha |y_i - eta|) phi_j(eta) d eta
        over the grid span, phi_j the hat functions.
    tail : ndarray
        Kernel mass beyond the last node, seen from each node.
    z_cut : float
        Optical distance beyond which cells are dropped.
    """

    grid: np.ndarray
    alpha: float
    weights: np.ndarray
    tail: np.ndarray
    z_cut: float = field(default=np.inf)

    def row_sums(self):
        return self.weights.sum(axis=1)


@dataclass
class RadField:
    """Shifted temperature u = T - T_M sampled on a grid."""

    grid: np.ndarray
    values: np.ndarray


def _cut_distance(tol):
    # half the kernel mass beyond optical distance z is (e^-z - z E1(z))/2
    f = lambda z: 0.5 * (np.exp(-z) - z * exp_integral_e1(z)) - tol
    return brentq(f, 1e-6, 800.0)


def build_rad_weights(grid, alpha, tol=1e-12):
    """Build E1 product-integration weights.

    Parameters
    ----------
    grid : array_like
        Strictly increasing nodes.
    alpha : float
        Absorption coefficient (> 0).
    tol : float
        Kernel mass that may be dropped beyond the truncation radius.
    """
    grid = np.ascontiguousarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with at least two nodes")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    z_cut = _cut_distance(tol)
    W, _, right = kernels.e1_hat_weights(grid, float(alpha), z_cut)
    W[W < 0] = 0.0  # rounding noise on far cells
    return RadKernelWeights(grid=grid, alpha=float(alpha), weights=W, tail=right, z_cut=z_cut)


def half_line_mass(y, alpha):
    """Exact int_0^inf (alpha/2) E1(alpha |y - eta|) d eta for y >= 0."""
    z = alpha * np.asarray(y, dtype=float)
    e1z = np.zeros_like(z)
    e1z[z > 0] = exp_integral_e1(z[z > 0])
    return 1.0 - 0.5 * (np.exp(-z) - z * e1z)


def _values(field, w):
    if isinstance(field, RadField):
        if field.grid.shape != w.grid.shape or not np.allclose(field.grid, w.grid, rtol=0, atol=1e-14):
            raise ValueError("field grid does not match the weight grid")
        return np.asarray(field.values, dtype=float)
    values = np.asarray(field, dtype=float)
    if values.shape[-1] != w.grid.size:
        raise ValueError("field length does not match the weight grid")
    return values


def apply_radiation(field, w: RadKernelWeights, T_M):
    """I[u + T_M] on the half-line, u continued as constant past the last node.

    ``field`` is a RadField or an array whose last axis runs over the grid.
    """
    T4 = (_values(field, w) + T_M) ** 4
    return T4 - T4 @ w.weights.T - T4[..., -1:] * w.tail


def apply_radiation_truncated(field, w: RadKernelWeights, T_M, R):
    """I^R[u + T_M]: kernel integral restricted to [0, R].

    If the grid stops short of R the field is continued as a constant up to R.
    """
    if w.grid[0] < 0 or w.grid[-1] > R * (1 + 1e-14):
        raise ValueError("grid must lie inside [0, R]")
    T4 = (_values(field, w) + T_M) ** 4
    out = T4 - T4 @ w.weights.T
    if w.grid[-1] < R:
        gap = 0.5 * (e1_moment0(w.alpha * (R - w.grid)) - e1_moment0(w.alpha * (w.grid[-1] - w.grid)))
        out = out - T4[..., -1:] * gap
    return out
