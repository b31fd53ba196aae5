"""Time the numba and numpy paths of each hot kernel.

    python benchmarks/bench_kernels.py [--repeat 20]

The numba column excludes compilation: every kernel is called once on the
same inputs before timing starts.
"""

import argparse
import timeit

import numpy as np

from potsim import _kernels


def cases(rng):
    n = 360
    x = rng.normal(size=4 * n)
    y = rng.normal(size=4 * n)
    u = rng.normal(size=200_000)
    m = 3
    A = rng.normal(size=(m, m))
    A *= 0.9 / np.abs(np.linalg.eigvals(A)).max()
    b_sum, b_diff, x0 = rng.normal(size=(3, m))
    v = rng.normal(size=50_000)
    return {
        "circular_xcorr (1440 samples, 360 lags)": (
            _kernels.circular_xcorr_numpy, _kernels.circular_xcorr_numba, (x, y, n)),
        "foh_first_order (200k samples)": (
            _kernels.foh_first_order_numpy, _kernels.foh_first_order_numba, (u, 0.99, 0.004, 0.006, 0.0)),
        "linear_recursion (3 states, 50k samples)": (
            _kernels.linear_recursion_numpy, _kernels.linear_recursion_numba, (A, b_sum, b_diff, v, x0)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return

    print(f"{'kernel':44s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}  max |diff|")
    for name, (slow, fast, inputs) in cases(np.random.default_rng(args.seed)).items():
        ref = slow(*inputs)
        got = fast(*inputs)  # compiles
        t_slow = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat))
        t_fast = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(ref - got)))
        print(f"{name:44s} {t_slow * 1e3:10.3f} {t_fast * 1e3:10.3f} {t_slow / t_fast:8.1f}x  {diff:.2e}")


if __name__ == "__main__":
    main()
