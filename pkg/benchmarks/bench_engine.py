#!/usr/bin/env python3
"""Throughput comparison: compiled kernels vs the pure-Python engine.

Both paths are bit-identical (see tests/test_kernel_equivalence.py); this
script only measures speed.  Run after an editable install:

    python benchmarks/bench_engine.py [--steps N]
"""

from __future__ import annotations

import argparse
import time

from socrl.engine import extension_available, run_phase
from socrl.presets import build_catch_pair, build_pacboy_qsum


def measure(builder, steps: int, force_fallback: bool) -> float:
    system = builder(seed=0)
    start = time.perf_counter()
    run_phase(system, steps, learning=True, force_fallback=force_fallback)
    return steps / (time.perf_counter() - start)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200_000,
                        help="compiled-path steps (the reference path runs 1/20th)")
    args = parser.parse_args()

    if not extension_available():
        print("compiled extension not available; benchmarking the reference path only")

    print(f"{'system':<10} {'engine':<10} {'steps/s':>12}")
    for name, builder in (("pacboy", build_pacboy_qsum), ("catch", build_catch_pair)):
        rates = {}
        if extension_available():
            rates["compiled"] = measure(builder, args.steps, force_fallback=False)
        rates["reference"] = measure(builder, max(args.steps // 20, 1000),
                                     force_fallback=True)
        for engine, rate in rates.items():
            print(f"{name:<10} {engine:<10} {rate:>12,.0f}")
        if len(rates) == 2:
            print(f"{name:<10} {'speedup':<10} {rates['compiled'] / rates['reference']:>11.1f}x")


if __name__ == "__main__":
    main()
