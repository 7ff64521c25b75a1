"""Special functions and heat-equation Green's kernels.

All functions accept scalars or numpy arrays (broadcast) and return the
same shape. Coordinates and times are non-dimensional.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels

# relative size (w.r.t. the kernel peak) at which image sums are cut
IMAGE_TOL = 1e-14


class DomainError(ValueError):
    """Argument outside the domain of a special function or kernel."""


@dataclass
class KernelArgs:
    """Arguments of a Green's kernel evaluation.

    Parameters
    ----------
    y : float or ndarray
        Field point.
    xi : float or ndarray
        Source point.
    at : float or ndarray
        Diffusivity-scaled elapsed time a*(t - tau), must be > 0.
    R : float, optional
        Half-length of the truncated domain (periodic kernels only).
    n_images : int, optional
        Number of image pairs on each side. ``None`` picks the count
        adaptively so the dropped tail is below ``IMAGE_TOL``.
    """

    y: object
    xi: object
    at: object
    R: float = None
    n_images: int = None


def _as_positive(x, name):
    x = np.asarray(x, dtype=float)
    if not (x > 0).all():
        raise DomainError(f"{name} must be > 0")
    return x


def _phi(z, s):
    # unchecked kernels for callers that already validated s
    return np.exp(-(z * z) / (4.0 * s)) / np.sqrt(4.0 * np.pi * s)


def _dphi(z, s):
    return -z / (2.0 * s) * _phi(z, s)


def _scalar(out):
    return out if out.ndim else float(out)


def _shaped(out, like):
    return out.reshape(like.shape) if like.ndim else float(out.reshape(()))


def exp_integral_e1(x):
    """Exponential integral E1(x) = int_x^inf exp(-t)/t dt for x > 0."""
    x = _as_positive(x, "x")
    out = kernels.e1(np.ascontiguousarray(x.ravel()))
    return _shaped(out, x)


def e1_moment0(z):
    """int_0^z E1(t) dt = 1 - exp(-z) + z E1(z), z >= 0."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("z must be >= 0")
    out = np.zeros_like(z)
    pos = z > 0
    zp = z[pos]
    out[pos] = 1.0 - np.exp(-zp) + zp * exp_integral_e1(zp)
    return out if z.ndim else float(out)


def e1_moment1(z):
    """int_0^z t E1(t) dt = z^2 E1(z)/2 - (z + 1) exp(-z)/2 + 1/2, z >= 0."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("z must be >= 0")
    out = np.zeros_like(z)
    pos = z > 0
    zp = z[pos]
    out[pos] = 0.5 * zp**2 * exp_integral_e1(zp) - 0.5 * (zp + 1.0) * np.exp(-zp) + 0.5
    return out if z.ndim else float(out)


def heat_kernel_phi(z, s):
    """Fundamental solution (4 pi s)^(-1/2) exp(-z^2 / 4s) of u_t = u_zz."""
    s = _as_positive(s, "s")
    return _scalar(_phi(np.asarray(z, dtype=float), s))


def heat_kernel_dphi(z, s):
    """d/dz of heat_kernel_phi."""
    s = _as_positive(s, "s")
    return _scalar(_dphi(np.asarray(z, dtype=float), s))


def greens_half_line(args: KernelArgs):
    """Dirichlet Green's function G = Phi(y - xi) - Phi(y + xi) on a half-line."""
    at = _as_positive(args.at, "at")
    y, xi = np.asarray(args.y, float), np.asarray(args.xi, float)
    return _scalar(_phi(y - xi, at) - _phi(y + xi, at))


def greens_image_sum(args: KernelArgs):
    """Neumann Green's function g = Phi(y - xi) + Phi(y + xi) on a half-line."""
    at = _as_positive(args.at, "at")
    y, xi = np.asarray(args.y, float), np.asarray(args.xi, float)
    return _scalar(_phi(y - xi, at) + _phi(y + xi, at))


def d_xi_image_sum(args: KernelArgs):
    """d/dxi of greens_image_sum; note d/dy G = -d/dxi g."""
    at = _as_positive(args.at, "at")
    y, xi = np.asarray(args.y, float), np.asarray(args.xi, float)
    return _scalar(_dphi(xi - y, at) + _dphi(xi + y, at))


def periodic_tail_bound(y, xi, at, R, n_images):
    """Upper bound on the image terms with |n| > n_images in greens_periodic.

    Terms with |n| = m are bounded by 4 Phi(d_m) where
    d_m = 2 m R - |y| - |xi|, and successive ratios by exp(-R d / at).
    """
    d = 2.0 * (n_images + 1) * R - np.abs(y) - np.abs(xi)
    d = np.maximum(d, 0.0)
    q = np.exp(-R * d / at)
    with np.errstate(divide="ignore"):
        return 4.0 * heat_kernel_phi(d, at) / np.maximum(1.0 - q, 1e-300)


def _pick_images(y, xi, at, R):
    peak = 1.0 / np.sqrt(4.0 * np.pi * np.min(at))
    n = 1
    while np.max(periodic_tail_bound(y, xi, at, R, n)) >= IMAGE_TOL * peak:
        n += 1
    return n


def greens_periodic(args: KernelArgs, return_tail=False):
    """Green's function on (0, R) with zero Dirichlet data at 0 and R.

    G_R = sum_n Phi(y - xi - 2nR) - Phi(y + xi - 2nR), n = -N..N.

    Parameters
    ----------
    args : KernelArgs
        Needs ``R >= 2``. ``n_images`` (N) is chosen adaptively when None.
    return_tail : bool
        Also return the bound on the dropped image terms.
    """
    at = _as_positive(args.at, "at")
    if args.R is None or args.R < 2:
        raise DomainError("periodic kernel needs R >= 2")
    R = float(args.R)
    y, xi = np.asarray(args.y, float), np.asarray(args.xi, float)
    n_img = args.n_images if args.n_images is not None else _pick_images(y, xi, at, R)
    if n_img < 1:
        raise DomainError("n_images must be >= 1")
    total = 0.0
    for n in range(-n_img, n_img + 1):
        total = total + _phi(y - xi - 2 * n * R, at) - _phi(y + xi - 2 * n * R, at)
    if return_tail:
        return total, periodic_tail_bound(y, xi, at, R, n_img)
    return total


def image_pairs_needed(R, s_max, extent=None):
    """Image pairs per side so that every dropped Gaussian is below IMAGE_TOL.

    ``extent`` bounds |y| and |xi| (defaults to R).
    """
    extent = R if extent is None else extent
    n = 0
    while True:
        d = 2.0 * (n + 1) * R - 2.0 * extent
        if d > 0 and d * d / (4.0 * s_max) > -np.log(IMAGE_TOL) + 2.0:
            return n
        n += 1
