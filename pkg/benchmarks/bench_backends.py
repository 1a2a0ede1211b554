#!/usr/bin/env python3
"""Timing comparison of the jitted kernels against the numpy fallbacks.

Each hot kernel ships in two versions selected per call via ZDMN_NO_NUMBA:
the outer-bound grid scan, the list decoder of the forward block code, and
the nearest-codeword search of the relay codebook experiment.

Run:  python3 benchmarks/bench_backends.py [--quick]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from zdmn import backend, bounds, gaussian, networks, polar


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _bench_grid(k: int):
    spec = networks.bscfb_spec(0.11)

    def run():
        bounds.grid_hull(spec, "capacity", k)

    return run


def _bench_polar(n: int, blocks: int):
    code = polar.PolarCode(n, int(0.4 * n), 0.11)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(1)))
    msgs = rng.integers(0, 2, size=(blocks, code.k), dtype=np.uint8)
    x = code.encode_batch(msgs)
    y = x ^ (rng.random((blocks, n)) < 0.11).astype(np.uint8)

    def run():
        code.decode_batch(y)

    return run


def _bench_nn(log2_m: int, n: int, trials: int):
    config = gaussian.GaussianRelayConfig(P=5.0, n=n, seed=0)

    def run():
        gaussian.codebook_experiment(
            config, rate=log2_m / n, trials=trials, cap=1 << log2_m, method="exhaustive"
        )

    return run


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    if args.quick:
        cases = [
            ("grid scan (k=8)", _bench_grid(8)),
            ("polar list decode (n=512, 64 blocks)", _bench_polar(512, 64)),
            ("codebook NN (M=2^12, n=16, 100 trials)", _bench_nn(12, 16, 100)),
        ]
        repeats = 2
    else:
        cases = [
            ("grid scan (k=12)", _bench_grid(12)),
            ("polar list decode (n=2000, 200 blocks)", _bench_polar(2000, 200)),
            ("codebook NN (M=2^16, n=16, 200 trials)", _bench_nn(16, 16, 200)),
        ]
        repeats = 3

    if not backend.HAS_NUMBA:
        print("numba is not installed; timing the numpy path only")

    rows = []
    for label, fn in cases:
        timings = {}
        for flag, name in (("1", "numpy"), ("0", "numba")):
            if name == "numba" and not backend.HAS_NUMBA:
                continue
            os.environ["ZDMN_NO_NUMBA"] = flag
            fn()  # warm-up: jit compilation / BLAS initialization
            timings[name] = _best_of(fn, repeats)
        rows.append((label, timings))
    os.environ.pop("ZDMN_NO_NUMBA", None)

    width = max(len(label) for label, _ in rows)
    header = f"{'kernel':<{width}}  {'numpy':>9}  {'numba':>9}  {'speedup':>7}"
    print(header)
    print("-" * len(header))
    for label, timings in rows:
        np_t = timings["numpy"]
        if "numba" in timings:
            nb_t = timings["numba"]
            print(
                f"{label:<{width}}  {np_t:>8.3f}s  {nb_t:>8.3f}s  {np_t / nb_t:>6.1f}x"
            )
        else:
            print(f"{label:<{width}}  {np_t:>8.3f}s  {'-':>9}  {'-':>7}")


if __name__ == "__main__":
    main()
