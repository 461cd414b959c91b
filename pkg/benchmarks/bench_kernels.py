"""Compare the compiled and numpy Duhamel kernels on a forward/backward scan workload.

Usage: python benchmarks/bench_kernels.py [--modes 256] [--samples 4000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from fbkinetic._backend import BACKEND, get_kernels


def workload(k, lam, xs, F, xq):
    I = k.forward_scan(lam, xs, F)
    K = k.backward_scan(lam, xs, F)
    k.eval_forward(lam, xs, F, I, xq)
    k.eval_backward(lam, xs, F, K, xq)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--modes", type=int, default=256)
    ap.add_argument("--samples", type=int, default=4000)
    ap.add_argument("--queries", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    lam = rng.uniform(0.1, 1e3, args.modes)
    xs = np.cumsum(np.r_[0.0, rng.uniform(1e-4, 1e-3, args.samples - 1)])
    F = rng.standard_normal((args.samples, args.modes))
    xq = rng.uniform(0, xs[-1], args.queries)

    names = ["python"] + (["cython"] if BACKEND == "cython" else [])
    best = {}
    for name in names:
        k = get_kernels(name)
        workload(k, lam, xs, F, xq)
        t = min(timeit.repeat(lambda: workload(k, lam, xs, F, xq), number=1, repeat=args.repeat))
        best[name] = t
        print(f"{name:>7}: {t * 1e3:9.2f} ms  ({args.modes} modes x {args.samples} samples, {args.queries} queries)")
    if len(best) == 2:
        print(f"speedup: {best['python'] / best['cython']:.1f}x")
    else:
        print("compiled kernels not available; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
