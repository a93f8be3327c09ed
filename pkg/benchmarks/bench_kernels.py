#!/usr/bin/env python3
"""Benchmark the kernel backends on the workloads that dominate runtime:
solution grids (quadrature + root solve per point) and RK4 characteristics.

Usage: python benchmarks/bench_kernels.py [--points N] [--steps N]
"""
import argparse
import time

import numpy as np

from g2cone._kernels import available_backends


def bench_solve_grid(mod, n_points: int) -> float:
    rng = np.random.default_rng(0)
    targets = rng.uniform(0.5, 30.0, n_points)
    fs = 10.0 ** rng.uniform(-4, 1, n_points)
    start = time.perf_counter()
    mod.solve_B_many(targets, fs, 1e-10)
    return time.perf_counter() - start


def bench_rk4(mod, steps: int, trajectories: int = 50) -> float:
    start = time.perf_counter()
    for i in range(trajectories):
        mod.rk4_characteristic(1.0 + 0.01 * i, 1.0, 2.0, 12.0, steps)
    return time.perf_counter() - start


def bench_quadrature(mod, n_evals: int = 2000) -> float:
    rng = np.random.default_rng(1)
    bs = rng.uniform(0.1, 20.0, n_evals)
    fs = 10.0 ** rng.uniform(-4, 1, n_evals)
    start = time.perf_counter()
    for b, f in zip(bs, fs):
        mod.quad_F(float(b), float(f), 1e-10)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=2000, help="grid points for the solve benchmark")
    parser.add_argument("--steps", type=int, default=10_000, help="RK4 steps per trajectory")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    workloads = [
        ("quad_F x2000", lambda m: bench_quadrature(m)),
        (f"solve_B grid ({args.points} pts)", lambda m: bench_solve_grid(m, args.points)),
        (f"RK4 50 x {args.steps} steps", lambda m: bench_rk4(m, args.steps)),
    ]

    results = {}
    for name, mod in sorted(backends.items()):
        results[name] = [fn(mod) for _, fn in workloads]

    width = max(len(w) for w, _ in workloads)
    header = f"{'workload':<{width}}" + "".join(f"  {n:>12}" for n in sorted(backends))
    if len(backends) == 2:
        header += f"  {'speedup':>9}"
    print(header)
    for i, (wname, _) in enumerate(workloads):
        row = f"{wname:<{width}}"
        for n in sorted(backends):
            row += f"  {results[n][i]:>10.4f}s"
        if len(backends) == 2:
            row += f"  {results['python'][i] / results['cython'][i]:>8.1f}x"
        print(row)

    # the two backends must agree on a spot-check before timings mean anything
    if len(backends) == 2:
        a = backends["python"].solve_B(7.0, 0.3, 1e-11)
        b = backends["cython"].solve_B(7.0, 0.3, 1e-11)
        assert abs(a - b) < 1e-9 * a, "backend disagreement"
        print(f"agreement spot-check: |dB| = {abs(a - b):.2e}")


if __name__ == "__main__":
    main()
