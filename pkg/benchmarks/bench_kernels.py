#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs each kernel on representative workloads and prints a table of
median wall times plus the native speedup. Use ``--json`` for a
machine-readable document.

    python3 benchmarks/bench_kernels.py [-n REPEATS] [--json]
"""

import argparse
import json
import statistics
import time

import numpy as np

from cephalo.kernels import available_implementations


def _workloads():
    rng = np.random.default_rng(42)
    scan = rng.random((2400, 1935))
    scan.setflags(write=False)
    params = np.column_stack([
        rng.uniform(20, 236, 19),
        rng.uniform(20, 236, 19),
        np.tile([1.5, 2.0, 3.0, 4.0], 5)[:19],
    ])
    params.setflags(write=False)
    stack = available_implementations()["python"].gaussian_stack(
        params, 256, 256)
    stack.setflags(write=False)
    return [
        ("minmax_normalize 2400x1935",
         lambda impl: impl.minmax_normalize(scan)),
        ("resize_bilinear 2400x1935->256",
         lambda impl: impl.resize_bilinear(scan, 256, 256)),
        ("gaussian_stack 19x256x256",
         lambda impl: impl.gaussian_stack(params, 256, 256)),
        ("decode_peaks 19x256x256",
         lambda impl: impl.decode_peaks(stack)),
    ]


def run(repeats: int) -> list[dict]:
    impls = available_implementations()
    rows = []
    for name, fn in _workloads():
        row = {"kernel": name}
        for impl_name, impl in impls.items():
            fn(impl)  # warm-up
            samples = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                fn(impl)
                samples.append((time.perf_counter() - t0) * 1e3)
            row[f"{impl_name}_ms"] = statistics.median(samples)
        if "native_ms" in row:
            row["speedup"] = row["python_ms"] / row["native_ms"]
        rows.append(row)
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("-n", "--repeats", type=int, default=7)
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args()

    rows = run(args.repeats)
    if args.json:
        print(json.dumps(rows, indent=1))
        return
    impls = sorted(available_implementations())
    header = f"{'kernel':<34}" + "".join(f"{i + ' ms':>14}" for i in impls)
    if "native" in impls:
        header += f"{'speedup':>10}"
    print(header)
    for row in rows:
        line = f"{row['kernel']:<34}" + "".join(
            f"{row[f'{i}_ms']:>14.3f}" for i in impls)
        if "speedup" in row:
            line += f"{row['speedup']:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
