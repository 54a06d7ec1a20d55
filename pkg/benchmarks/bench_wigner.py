"""Benchmark the numba Wigner kernel against the numpy/scipy fallback.

Run:  python benchmarks/bench_wigner.py [--cutoff 16] [--grid 201]
The same grid is evaluated by both paths; the report shows per-call wall
times (after a warm-up call so numba's compilation cost is excluded) and the
maximum pointwise deviation between the two implementations.
"""

import argparse
import time

import numpy as np

from pulsemps._wigner_kernels import (_HAVE_NUMBA, wigner_points_numba,
                                      wigner_points_numpy)


def random_density_matrix(cutoff, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(cutoff, cutoff)) + 1j * rng.normal(size=(cutoff, cutoff))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def bench(func, alphas, rho, repeats):
    func(rho, alphas[:16])  # warm-up (numba compilation, scipy caches)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = func(rho, alphas)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cutoff", type=int, default=16)
    ap.add_argument("--grid", type=int, default=201)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rho = random_density_matrix(args.cutoff)
    xs = np.linspace(-6, 6, args.grid)
    alphas = ((xs[:, None] + 1j * xs[None, :]) / np.sqrt(2)).ravel()
    print(f"cutoff {args.cutoff}, grid {args.grid}x{args.grid} "
          f"({alphas.size} points)")

    t_np, w_np = bench(wigner_points_numpy, alphas, rho, args.repeats)
    print(f"numpy/scipy : {t_np * 1e3:9.2f} ms")
    if _HAVE_NUMBA:
        t_nb, w_nb = bench(wigner_points_numba, alphas, rho, args.repeats)
        print(f"numba       : {t_nb * 1e3:9.2f} ms   (speedup {t_np / t_nb:.1f}x)")
        print(f"max deviation: {np.max(np.abs(w_np - w_nb)):.3e}")
    else:
        print("numba       : not available")


if __name__ == "__main__":
    main()
