#!/usr/bin/env python3
"""Benchmark the jitted kernels against their pure-numpy fallbacks.

The transfer-map kernel dominates Monte Carlo runtime at paper scale, the
scatter kernel dominates the waveform oracle.  Run with
CFMIMO_DISABLE_NUMBA=1 to confirm the fallback path is what this script
times as "numpy".
"""

import time

import numpy as np

from cfmimo._kernels import (
    HAS_NUMBA,
    class_range,
    link_coeffs_numba,
    link_coeffs_numpy,
    scatter_add_numba,
    scatter_add_numpy,
)


def time_fn(fn, *args, repeat=20):
    fn(*args)  # warmup / jit compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_link_coeffs(n_links, t_d, m_sub, cp, label):
    rng = np.random.default_rng(0)
    taps = rng.standard_normal((n_links, t_d)) + 1j * rng.standard_normal((n_links, t_d))
    shifts = rng.integers(-20, 3 * m_sub // 2, size=n_links)
    classes = class_range(shifts, t_d, m_sub, cp)
    args = (taps, shifts, m_sub // 2, m_sub, cp, classes)
    t_np = time_fn(link_coeffs_numpy, *args, False)
    row = f"link_coeffs {label:22s} numpy {t_np * 1e3:8.2f} ms"
    if HAS_NUMBA:
        t_nb = time_fn(link_coeffs_numba, *args, False)
        a = link_coeffs_numpy(*args, False)
        b = link_coeffs_numba(*args, False)
        assert np.allclose(a, b, atol=1e-10)
        row += f"   numba {t_nb * 1e3:8.2f} ms   speedup {t_np / t_nb:5.2f}x"
    print(row)


def bench_scatter(n_rows, n_samples, t_d, label):
    rng = np.random.default_rng(1)
    src = rng.standard_normal((n_rows, n_samples)) + 1j * rng.standard_normal((n_rows, n_samples))
    taps = rng.standard_normal(t_d) + 1j * rng.standard_normal(t_d)
    out = np.zeros((n_rows, n_samples + 64), dtype=complex)

    def run_np():
        out[:] = 0
        scatter_add_numpy(out, src, 17, taps)

    t_np = time_fn(run_np)
    row = f"scatter_add {label:22s} numpy {t_np * 1e3:8.2f} ms"
    if HAS_NUMBA:
        def run_nb():
            out[:] = 0
            scatter_add_numba(out, src, 17, taps)

        t_nb = time_fn(run_nb)
        row += f"   numba {t_nb * 1e3:8.2f} ms   speedup {t_np / t_nb:5.2f}x"
    print(row)


def main():
    print(f"numba available: {HAS_NUMBA}")
    bench_link_coeffs(8 * 10 * 4, 3, 32, 4, "desk  (320 links, M=32)")
    bench_link_coeffs(20 * 30 * 8, 3, 128, 10, "paper (4800 links, M=128)")
    bench_scatter(250, 3 * 18 + 80, 2, "oracle trial batch")
    bench_scatter(2000, 3 * 138 + 300, 3, "paper-scale frames")


if __name__ == "__main__":
    main()
