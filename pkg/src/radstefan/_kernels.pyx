# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: E1, Gaussian hat moments and E1 hat moments."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, erf, erfc, fabs, INFINITY

cnp.import_array()

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double PI = 3.14159265358979323846
cdef double FPMIN = 1e-300
cdef double EPS = 1e-17


cdef inline double _e1(double x) noexcept nogil:
    cdef double total, term, b, c, d, h, an, delta
    cdef int k
    if x < 1.0:
        total = -EULER_GAMMA - log(x)
        term = 1.0
        for k in range(1, 200):
            term *= -x / k
            delta = -term / k
            total += delta
            if fabs(delta) < EPS * fabs(total):
                break
        return total
    b = x + 1.0
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for k in range(1, 500):
        an = -<double>(k * k)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if fabs(delta - 1.0) < EPS:
            break
    return h * exp(-x)


def e1(double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _e1(x[i])
    return out


cdef inline double _erf_diff(double za, double zb) noexcept nogil:
    # erf(zb) - erf(za) without tail cancellation
    if za >= 0.0:
        return erfc(za) - erfc(zb)
    if zb <= 0.0:
        return erfc(-zb) - erfc(-za)
    return erf(zb) - erf(za)


cdef void _accumulate_center(double[::1] x, double c, double s, double sg,
                             double width, double[::1] rowG, double[::1] rowg,
                             double[::1] rowdg) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], lo, hi, mid, j
    cdef double r4s = sqrt(4.0 * s), norm = 1.0 / sqrt(4.0 * PI * s)
    cdef double h, za, zb, phia, phib, i0, i1, wl, wr, dl, dr
    if c + width < x[0] or c - width > x[n - 1]:
        return
    # first cell whose right node exceeds c - width
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x[mid] < c - width:
            lo = mid
        else:
            hi = mid
    za = (x[lo] - c) / r4s
    phia = norm * exp(-za * za)
    for j in range(lo, n - 1):
        if x[j] > c + width:
            break
        h = x[j + 1] - x[j]
        zb = (x[j + 1] - c) / r4s
        phib = norm * exp(-zb * zb)
        i0 = 0.5 * _erf_diff(za, zb)
        i1 = -2.0 * s * (phib - phia)
        wl = ((x[j + 1] - c) * i0 - i1) / h
        wr = (i1 - (x[j] - c) * i0) / h
        dl = -phia + i0 / h
        dr = phib - i0 / h
        rowG[j] += sg * wl
        rowG[j + 1] += sg * wr
        rowg[j] += wl
        rowg[j + 1] += wr
        rowdg[j] += dl
        rowdg[j + 1] += dr
        za = zb
        phia = phib


def gauss_hat_matrices(double[::1] x, double[::1] y, double s, double period,
                       int n_pairs, double n_sigma):
    """Hat-function moments of G, g and d/dxi g with image sums.

    period is 2R for the periodised kernels; n_pairs = 0 gives the
    half-line kernels.
    """
    cdef Py_ssize_t ny = y.shape[0], nx = x.shape[0], i
    cdef int p
    cdef double width = n_sigma * sqrt(4.0 * s)
    MG = np.zeros((ny, nx))
    Mg = np.zeros((ny, nx))
    Mdg = np.zeros((ny, nx))
    cdef double[:, ::1] G = MG
    cdef double[:, ::1] g = Mg
    cdef double[:, ::1] dg = Mdg
    with nogil:
        for i in range(ny):
            for p in range(-n_pairs, n_pairs + 1):
                _accumulate_center(x, y[i] - p * period, s, 1.0, width,
                                   G[i], g[i], dg[i])
                _accumulate_center(x, p * period - y[i], s, -1.0, width,
                                   G[i], g[i], dg[i])
    return MG, Mg, Mdg


cdef inline double _b0(double z) noexcept nogil:
    # A0(z) - 1 with A0(z) = int_0^z E1
    if z <= 0.0:
        return -1.0
    return -exp(-z) + z * _e1(z)


cdef inline double _b1(double z) noexcept nogil:
    # A1(z) - 1/2 with A1(z) = int_0^z t E1(t) dt
    if z <= 0.0:
        return -0.5
    return 0.5 * z * z * _e1(z) - 0.5 * (z + 1.0) * exp(-z)


def e1_hat_weights(double[::1] x, double alpha, double z_cut):
    """Weights W[i, j] = int (alpha/2) E1(alpha|x_i - eta|) psi_j(eta) d eta.

    Also returns the kernel mass beyond each grid end.
    """
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double zn, zf, d0, d1, span
    W = np.zeros((n, n))
    left = np.empty(n)
    right = np.empty(n)
    cdef double[:, ::1] w = W
    cdef double[::1] lt = left
    cdef double[::1] rt = right
    with nogil:
        for i in range(n):
            for j in range(i, n - 1):
                zn = alpha * (x[j] - x[i])
                if zn > z_cut:
                    break
                zf = alpha * (x[j + 1] - x[i])
                span = zf - zn
                d0 = _b0(zf) - _b0(zn)
                d1 = _b1(zf) - _b1(zn)
                w[i, j] += 0.5 * (zf * d0 - d1) / span
                w[i, j + 1] += 0.5 * (d1 - zn * d0) / span
            for j in range(i, 0, -1):
                zn = alpha * (x[i] - x[j])
                if zn > z_cut:
                    break
                zf = alpha * (x[i] - x[j - 1])
                span = zf - zn
                d0 = _b0(zf) - _b0(zn)
                d1 = _b1(zf) - _b1(zn)
                w[i, j] += 0.5 * (zf * d0 - d1) / span
                w[i, j - 1] += 0.5 * (d1 - zn * d0) / span
            rt[i] = -0.5 * _b0(alpha * (x[n - 1] - x[i]))
            lt[i] = -0.5 * _b0(alpha * (x[i] - x[0]))
    return W, left, right
