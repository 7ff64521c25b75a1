"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 200] [--repeat 5]

Prints the best-of-repeat time of each kernel for both backends, the
speed-up, and the largest difference between their outputs.
"""

import argparse
import timeit

import numpy as np

from radstefan import _kernels_py

try:
    from radstefan import _kernels
except ImportError:
    _kernels = None


def cases(n):
    x = np.linspace(0.0, 8.0, n + 1)
    z = np.logspace(-6, 2, 20 * n)
    return {
        "e1": lambda k: k.e1(z),
        "gauss_hat_matrices s=1e-3": lambda k: k.gauss_hat_matrices(x, x, 1e-3, 16.0, 1, 8.0),
        "gauss_hat_matrices s=0.5": lambda k: k.gauss_hat_matrices(x, x, 0.5, 16.0, 1, 8.0),
        "e1_hat_weights": lambda k: k.e1_hat_weights(x, 1.0, 30.0),
    }


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(u, v) for u, v in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200, help="grid cells")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':28s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speed-up':>9s} {'max |diff|':>11s}")
    for name, f in cases(args.n).items():
        tp = min(timeit.repeat(lambda: f(_kernels_py), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:28s} {1e3 * tp:12.2f}")
            continue
        tc = min(timeit.repeat(lambda: f(_kernels), number=1, repeat=args.repeat))
        d = max_diff(f(_kernels_py), f(_kernels))
        print(f"{name:28s} {1e3 * tp:12.2f} {1e3 * tc:14.2f} {tp / tc:9.1f} {d:11.2e}")


if __name__ == "__main__":
    main()
