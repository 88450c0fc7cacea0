"""Compare the compiled and pure-numpy kernel backends.

Times the three hot paths (in-place butterfly transform, sign-row sampling,
and the member-cell scan) under both backends, after verifying that the two
produce identical outputs.  Run as a script:

    python3 -m benchmarks.bench_kernels --size 20 --scan-n 18 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from walshdiv._kernels import (
    backend,
    cell_scan,
    hadamard_inplace,
    use_backend,
    walsh_sign_row,
)

BACKENDS = ("numpy", "numba")


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_hadamard(k: int, repeat: int) -> dict[str, float]:
    rng = np.random.default_rng(7)
    base = rng.integers(-1000, 1000, size=1 << k).astype(np.int64)
    outputs = {}
    timings = {}
    for name in BACKENDS:
        with use_backend(name):
            v = base.copy()
            hadamard_inplace(v)  # warm-up (and JIT compile on the numba side)
            outputs[name] = v
            work = base.copy()

            def run() -> None:
                work[:] = base
                hadamard_inplace(work)

            timings[name] = _time(run, repeat)
    assert np.array_equal(outputs["numpy"], outputs["numba"]), "backends disagree"
    return timings


def bench_sign_row(k: int, repeat: int) -> dict[str, float]:
    rx = (1 << k) - 3
    outputs = {}
    timings = {}
    for name in BACKENDS:
        with use_backend(name):
            outputs[name] = walsh_sign_row(rx, 1 << k)
            timings[name] = _time(lambda: walsh_sign_row(rx, 1 << k), repeat)
    assert np.array_equal(outputs["numpy"], outputs["numba"]), "backends disagree"
    return timings


def bench_cell_scan(n: int, repeat: int) -> dict[str, float]:
    outputs = {}
    timings = {}
    for name in BACKENDS:
        with use_backend(name):
            outputs[name] = cell_scan(n)
            timings[name] = _time(lambda: cell_scan(n), repeat)
    for a, b in zip(outputs["numpy"], outputs["numba"]):
        assert np.array_equal(a, b), "backends disagree"
    return timings


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=20,
                        help="log2 length for transform/sign-row benches")
    parser.add_argument("--scan-n", type=int, default=18,
                        help="order for the member-cell scan bench")
    parser.add_argument("--repeat", type=int, default=5,
                        help="repetitions (best-of timing)")
    args = parser.parse_args(argv)

    rows = [
        (f"hadamard_inplace 2^{args.size}", bench_hadamard(args.size, args.repeat)),
        (f"walsh_sign_row   2^{args.size}", bench_sign_row(args.size, args.repeat)),
        (f"cell_scan        n={args.scan_n}", bench_cell_scan(args.scan_n, args.repeat)),
    ]

    print(f"default backend: {backend()}  (override with WALSHDIV_NUMBA=0|1)")
    print(f"{'kernel':<24} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for label, t in rows:
        speed = t["numpy"] / t["numba"] if t["numba"] else float("inf")
        print(f"{label:<24} {t['numpy'] * 1e3:>8.2f}ms {t['numba'] * 1e3:>8.2f}ms "
              f"{speed:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
