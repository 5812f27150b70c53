"""Benchmark: compiled pairwise kernel vs the pure NumPy fallback.

Times action_sums (the causal-action hot loop) and product_spectra_block on
random Hermitian stacks of a few sizes.  Run with:  python benchmarks/bench_pairwise.py
"""

import time

import numpy as np

from causalab import pairstats
from causalab._pairstats_py import action_sums as np_action_sums
from causalab._pairstats_py import product_spectra_block as np_spectra


def random_stack(rng, m, d):
    z = rng.standard_normal((m, d, d)) + 1j * rng.standard_normal((m, d, d))
    return np.ascontiguousarray(0.5 * (z + np.conj(np.transpose(z, (0, 2, 1)))))


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    rng = np.random.default_rng(0)
    print(f"selected backend: {pairstats.BACKEND}")
    if pairstats.BACKEND == "numpy":
        print("compiled kernel unavailable; baseline only\n")
    header = f"{'m':>4} {'d':>4} | {'compiled (s)':>12} {'numpy (s)':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    # (2, 2) is the minimizer's hot regime: thousands of tiny objective calls.
    for m, d in [(2, 2), (16, 4), (32, 8), (24, 16), (12, 32), (64, 4)]:
        ops = random_stack(rng, m, d)
        w = rng.uniform(0.5, 2.0, m)
        norms = np.array([np.linalg.norm(o, 2) for o in ops])
        args = (ops, w, norms, 4, 1e-10)
        reps = 200 if m * d <= 16 else 3
        t_np = best_of(lambda: np_action_sums(*args), reps)
        if pairstats.BACKEND == "cython":
            t_cy = best_of(lambda: pairstats.action_sums(*args), reps)
            a = pairstats.action_sums(*args)
            b = np_action_sums(*args)
            assert abs(a[0] - b[0]) <= 1e-9 * max(1.0, abs(b[0])), (a, b)
            print(f"{m:>4} {d:>4} | {t_cy:12.6f} {t_np:12.6f} {t_np / t_cy:8.1f}x")
        else:
            print(f"{m:>4} {d:>4} | {'-':>12} {t_np:12.6f} {'':>8}")
    print()
    m, d = 24, 8
    ops = random_stack(rng, m, d)
    t_np = best_of(lambda: np_spectra(ops, ops))
    line = f"spectra block m={m} d={d}: numpy {t_np:.5f}s"
    if pairstats.BACKEND == "cython":
        t_cy = best_of(lambda: pairstats.product_spectra_block(ops, ops))
        line += f", compiled {t_cy:.5f}s ({t_np / t_cy:.1f}x)"
    print(line)


if __name__ == "__main__":
    main()
