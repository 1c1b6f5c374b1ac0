"""Benchmark the radio-medium trial kernels: numba vs pure numpy.

Runs the link-trial kernel (the hot loop behind range tests) over a range
of batch sizes with both builds and prints a comparison table.  The first
numba call includes JIT compilation; it is timed separately.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from firewatch import kernels


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.uniform(0, 800, n)
    del_x = np.array([100.0, 200.0, 350.0, 700.0])
    del_p = np.array([1.0, 0.95, 0.10, 0.0])
    rssi_x = np.array([100.0, 200.0, 350.0])
    rssi_m = np.array([-112.0, -112.0, -115.0])
    lat_m = np.array([0.0515, 0.1029, 0.1853])
    u = rng.random(n)
    z = rng.standard_normal(n)
    j = rng.uniform(0.9, 1.1, n)
    return (d, del_x, del_p, rssi_x, rssi_m, rssi_x, lat_m, u, z, j, 2.0)


def time_fn(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    opts = ap.parse_args()

    impls = kernels.implementations()
    print(f"active backend: {kernels.BACKEND}")
    if "numba" not in impls:
        print("numba not importable; benchmarking the numpy build only")

    if "numba" in impls:
        args = make_inputs(1000)
        t0 = time.perf_counter()
        impls["numba"]["trial_outcomes"](*args)
        print(f"numba JIT compile + first call: {time.perf_counter() - t0:.3f} s")

    sizes = (1_000, 10_000, 100_000, 1_000_000)
    header = f"{'batch':>10} {'numpy (ms)':>12}"
    if "numba" in impls:
        header += f" {'numba (ms)':>12} {'speedup':>8}"
    print(header)
    for n in sizes:
        args = make_inputs(n)
        t_np = time_fn(impls["numpy"]["trial_outcomes"], args, opts.repeats)
        row = f"{n:>10} {t_np * 1e3:>12.3f}"
        if "numba" in impls:
            t_nb = time_fn(impls["numba"]["trial_outcomes"], args, opts.repeats)
            row += f" {t_nb * 1e3:>12.3f} {t_np / t_nb:>8.2f}x"
        print(row)

    # parity guard: both builds must agree bit for bit
    if "numba" in impls:
        args = make_inputs(50_000, seed=1)
        a = impls["numpy"]["trial_outcomes"](*args)
        b = impls["numba"]["trial_outcomes"](*args)
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), "backend mismatch"
        print("parity: numba and numpy outputs are bit-identical")


if __name__ == "__main__":
    main()
