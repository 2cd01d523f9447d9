"""Time the numba and numpy kernel families on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 257 1025 4097] [--repeat 50]

Also times a short partitioned PDE run with each backend, by rebinding
the dispatch table in-process.
"""

import argparse
import time

import numpy as np

from blowup_cross import kernels, pde_buffer


def best_of(fn, repeat):
    fn()  # warm up (numba compiles on first call)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(n):
    x = np.linspace(0, np.pi, n)
    h = x[1] - x[0]
    w = pde_buffer.analytic_w(x, 0.3)
    v = pde_buffer.analytic_v(x, 0.3)
    return {
        "bad_rhs": lambda k: k["bad_rhs"](w, h, 1.0, 0, 0),
        "good_rhs": lambda k: k["good_rhs"](v, h, 1.0, 0, 0),
        "implicit_bad_step": lambda k: k["implicit_bad_step"](w, 1e-5, h, 1.0, 0, 0, 1e-10, 50, 8),
        "implicit_good_step": lambda k: k["implicit_good_step"](v, 1e-5, h, 1.0, 0, 0),
    }


def pde_run(table, t_end):
    saved = kernels.ACTIVE
    kernels.ACTIVE = table
    try:
        cfg = pde_buffer.PdeConfig(t_end=t_end)
        t0 = time.perf_counter()
        pde_buffer.run_pde(cfg)
        return time.perf_counter() - t0
    finally:
        kernels.ACTIVE = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[257, 1025, 4097])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--t-end", type=float, default=0.36)
    args = ap.parse_args()

    print(f"{'kernel':<20}{'n':>7}{'numba [us]':>14}{'numpy [us]':>14}{'speedup':>10}")
    for n in args.n:
        for name, call in kernel_cases(n).items():
            tn = best_of(lambda: call(kernels.NUMBA_KERNELS), args.repeat)
            tp = best_of(lambda: call(kernels.NUMPY_KERNELS), args.repeat)
            print(f"{name:<20}{n:>7}{tn * 1e6:>14.1f}{tp * 1e6:>14.1f}{tp / tn:>10.1f}")

    pde_run(kernels.NUMBA_KERNELS, 1e-4)
    tn = pde_run(kernels.NUMBA_KERNELS, args.t_end)
    tp = pde_run(kernels.NUMPY_KERNELS, args.t_end)
    print(f"\npde-cross to t={args.t_end}: numba {tn:.2f} s, numpy {tp:.2f} s, speedup {tp / tn:.1f}")


if __name__ == "__main__":
    main()
