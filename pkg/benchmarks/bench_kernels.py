#!/usr/bin/env python3
"""Time every hot kernel under both backends (numba loop vs numpy fallback).

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeat N]

Reports the best-of-N wall time per call and the numba speedup.  Workloads
mirror the Monte Carlo hot paths: per-replication recursions and statistic
scans at T = 500, and blocks of limit-process draws at the default
tabulation resolution.
"""

import argparse
import timeit

import numpy as np

from breaklab._backend import HAVE_NUMBA
from breaklab.kernels import IMPLEMENTATIONS


def build_workloads():
    rng = np.random.default_rng(0)
    T = 500
    X = np.column_stack([np.ones(T), rng.standard_normal(T)])
    y = X @ np.array([1.0, 0.5]) + rng.standard_normal(T)
    resid = y - X @ np.linalg.lstsq(X, y, rcond=None)[0]
    sigma2 = float(resid @ resid / T)

    n = 2000
    block = 256
    z1 = rng.standard_normal((block, n))
    z2 = rng.standard_normal((block, 2, n))
    sdt = np.sqrt(1.0 / n)
    dbe = z2[:, 0, :] * sdt
    dbu = (-0.5 * z2[:, 0, :] + np.sqrt(0.75) * z2[:, 1, :]) * sdt

    return [
        ("ar1_path (T=500)", "ar1_path", (rng.standard_normal(T), 0.99, 0.0)),
        ("wald_scan (T=500, p=2)", "wald_scan", (X, y, 75, 425, sigma2, 1e-10)),
        (f"bridge_sup ({block}x{n})", "bridge_sup", (z1, 0, n)),
        (f"qp_sup ({block}x2x{n})", "qp_sup", (z2, 300, 1700)),
        (f"lur_cusum_sup ({block}x{n})", "lur_cusum_sup", (dbe, dbu, -5.0)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions")
    parser.add_argument("--number", type=int, default=10, help="calls per repetition")
    args = parser.parse_args()

    if not HAVE_NUMBA:
        print("numba is not importable; only the numpy fallback will be timed\n")

    print(f"{'kernel':<28} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    print("-" * 64)
    for label, name, kernel_args in build_workloads():
        times = {}
        for backend in ("numpy", "numba"):
            impl = IMPLEMENTATIONS[name].get(backend)
            if impl is None:
                continue
            impl(*kernel_args)  # warm up (JIT compile / cache load)
            best = min(
                timeit.repeat(
                    lambda: impl(*kernel_args), number=args.number, repeat=args.repeat
                )
            )
            times[backend] = best / args.number
        numpy_t = times["numpy"]
        if "numba" in times:
            ratio = numpy_t / times["numba"]
            print(
                f"{label:<28} {numpy_t * 1e3:>10.3f}ms {times['numba'] * 1e3:>10.3f}ms"
                f" {ratio:>8.1f}x"
            )
        else:
            print(f"{label:<28} {numpy_t * 1e3:>10.3f}ms {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
