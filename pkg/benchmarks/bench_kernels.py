"""Benchmark: compiled vs pure-Python moment kernel.

Times the truncated-normal moment batch (the E-step hot path) on three
regimes: recurrence-only (all conditional means positive), quadrature-only
(all negative), and a realistic mix, across batch sizes and orders.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from fads import _moment_kernel_cy as cy
from fads import _moment_kernel_py as py


def bench(kernel, m, v, p, repeat=7):
    kernel(m, v, p)  # warm up
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        kernel(m, v, p)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'regime':<12} {'n':>6} {'p':>5} {'python':>10} {'cython':>10} {'speedup':>8}")
    for n in (300, 3000):
        for p in (30, 500):
            v = np.exp(rng.standard_normal(n))
            base = rng.standard_normal(n) * 2
            cases = {
                "recurrence": np.abs(base) + 0.01,
                "quadrature": -np.abs(base) - 0.01,
                "mixed": base,
            }
            for name, m in cases.items():
                tp = bench(py.moment_batch, m, v, p)
                tc = bench(cy.moment_batch, m, v, p)
                a = py.moment_batch(m, v, p)
                b = cy.moment_batch(m, v, p)
                rel = max(
                    float(np.max(np.abs(x - y) / np.maximum(np.abs(x), 1e-300)))
                    for x, y in zip(a, b)
                )
                assert rel < 1e-11, f"kernel mismatch {rel}"
                print(f"{name:<12} {n:>6} {p:>5} {tp * 1e3:>9.2f}ms {tc * 1e3:>9.2f}ms "
                      f"{tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
