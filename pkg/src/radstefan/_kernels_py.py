"""Pure numpy versions of the compiled kernels (same signatures)."""

import numpy as np
from scipy.special import erf, erfc

EULER_GAMMA = 0.57721566490153286061
_FPMIN = 1e-300
_EPS = 1e-17


def _e1_series(x):
    total = -EULER_GAMMA - np.log(x)
    term = np.ones_like(x)
    for k in range(1, 200):
        term = term * (-x / k)
        delta = -term / k
        total = total + delta
        if np.all(np.abs(delta) < _EPS * np.abs(total)):
            break
    return total


def _e1_cf(x):
    # modified Lentz, vectorised; iterate until every entry has converged
    b = x + 1.0
    c = np.full_like(x, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    for k in range(1, 500):
        an = -float(k * k)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    return h * np.exp(-x)


def e1(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1.0
    if small.any():
        out[small] = _e1_series(x[small])
    if (~small).any():
        out[~small] = _e1_cf(x[~small])
    return out


def _erf_diff(za, zb):
    out = erf(zb) - erf(za)
    pos = za >= 0.0
    out[pos] = erfc(za[pos]) - erfc(zb[pos])
    neg = zb <= 0.0
    out[neg] = erfc(-zb[neg]) - erfc(-za[neg])
    return out


def gauss_hat_matrices(x, y, s, period, n_pairs, n_sigma):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ny, nx = y.size, x.size
    MG = np.zeros((ny, nx))
    Mg = np.zeros((ny, nx))
    Mdg = np.zeros((ny, nx))
    r4s = np.sqrt(4.0 * s)
    norm = 1.0 / np.sqrt(4.0 * np.pi * s)
    h = np.diff(x)
    width = n_sigma * r4s
    for p in range(-n_pairs, n_pairs + 1):
        for centers, sg in ((y - p * period, 1.0), (p * period - y, -1.0)):
            live = (centers + width >= x[0]) & (centers - width <= x[-1])
            if not live.any():
                continue
            c = centers[live][:, None]
            dist = x[None, :] - c
            z = dist / r4s
            phi = norm * np.exp(-z * z)
            za, zb = z[:, :-1], z[:, 1:]
            i0 = 0.5 * _erf_diff(za.ravel(), zb.ravel()).reshape(za.shape)
            i1 = -2.0 * s * (phi[:, 1:] - phi[:, :-1])
            wl = (dist[:, 1:] * i0 - i1) / h
            wr = (i1 - dist[:, :-1] * i0) / h
            dl = -phi[:, :-1] + i0 / h
            dr = phi[:, 1:] - i0 / h
            for M, left, right, sign in ((MG, wl, wr, sg), (Mg, wl, wr, 1.0),
                                         (Mdg, dl, dr, 1.0)):
                block = np.zeros((c.shape[0], nx))
                block[:, :-1] += left
                block[:, 1:] += right
                M[live] += sign * block
    return MG, Mg, Mdg


def _b0(z):
    out = np.full_like(z, -1.0)
    pos = z > 0
    zp = z[pos]
    out[pos] = -np.exp(-zp) + zp * e1(zp)
    return out


def _b1(z):
    out = np.full_like(z, -0.5)
    pos = z > 0
    zp = z[pos]
    out[pos] = 0.5 * zp * zp * e1(zp) - 0.5 * (zp + 1.0) * np.exp(-zp)
    return out


def e1_hat_weights(x, alpha, z_cut):
    x = np.asarray(x, dtype=float)
    n = x.size
    W = np.zeros((n, n))
    dist = alpha * np.abs(x[None, :] - x[:, None])
    b0 = _b0(dist.ravel()).reshape(dist.shape)
    b1 = _b1(dist.ravel()).reshape(dist.shape)
    rows = np.arange(n)
    for side in (1, -1):
        # cells to the right (side=1) or left (side=-1) of each target node
        for i in range(n):
            if side == 1:
                near = np.arange(i, n - 1)
                far = near + 1
            else:
                near = np.arange(i, 0, -1)
                far = near - 1
            if near.size == 0:
                continue
            zn = dist[i, near]
            keep = zn <= z_cut
            near, far, zn = near[keep], far[keep], zn[keep]
            zf = dist[i, far]
            span = zf - zn
            d0 = b0[i, far] - b0[i, near]
            d1 = b1[i, far] - b1[i, near]
            np.add.at(W[i], near, 0.5 * (zf * d0 - d1) / span)
            np.add.at(W[i], far, 0.5 * (d1 - zn * d0) / span)
    right = -0.5 * b0[rows, n - 1]
    left = -0.5 * b0[rows, 0]
    return W, left, right
