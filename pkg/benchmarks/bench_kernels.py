#!/usr/bin/env python3
"""Throughput comparison of the numba kernels against the pure-numpy
fallbacks (selected with PROBECAST_PURE_NUMPY=1).

Runs itself twice, once per path, and prints one table. Invoke directly:

    python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def measure():
    from probecast import kernels
    from probecast.accel import USING_NUMBA

    kernels.warmup()
    results = {"path": "numba" if USING_NUMBA else "pure-numpy"}

    state = kernels.new_cpu_state()
    n = 0
    t0 = time.perf_counter()
    while time.perf_counter() - t0 < 1.0:
        n += kernels.cpu_chunk(state, kernels.CPU_CHECK_EVERY)
    results["cpu_ops_per_s"] = n / (time.perf_counter() - t0)

    arr = np.zeros(256 << 20, dtype=np.uint8)
    arr[::4096] = 1
    off, n = 0, 0
    t0 = time.perf_counter()
    while time.perf_counter() - t0 < 1.0:
        off, done, _ = kernels.mem_chunk(arr, off, 0, len(arr), 128,
                                         kernels.MEM_CHECK_EVERY)
        n += done
    results["mem_accesses_per_s"] = n / (time.perf_counter() - t0)

    from probecast.linear import train_linear
    from probecast.svr import train_svr
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 10, size=(800, 3))
    y = 30 + X[:, 0] + 0.3 * X[:, 1] ** 2
    train_linear("elasticnet", X[:20], y[:20])   # compile outside the clock
    train_svr(X[:20], y[:20], max_passes=50)
    t0 = time.perf_counter()
    train_linear("elasticnet", X, y)
    results["elasticnet_fit_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    train_svr(X[:300], y[:300], C=100.0, epsilon=0.1, max_passes=4000)
    results["svr_fit_s"] = time.perf_counter() - t0
    return results


def main():
    if os.environ.get("_BENCH_CHILD"):
        print(json.dumps(measure()))
        return

    rows = []
    for pure in ("0", "1"):
        env = dict(os.environ, _BENCH_CHILD="1", PROBECAST_PURE_NUMPY=pure)
        out = subprocess.run([sys.executable, __file__], env=env,
                             capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))

    print(f"{'kernel':<24}{rows[0]['path']:>16}{rows[1]['path']:>16}{'speedup':>10}")
    for key, label, unit in (
            ("cpu_ops_per_s", "cpu probe ops/s", "{:,.0f}"),
            ("mem_accesses_per_s", "mem probe accesses/s", "{:,.0f}"),
            ("elasticnet_fit_s", "elasticnet fit (s)", "{:.3f}"),
            ("svr_fit_s", "svr fit (s)", "{:.3f}")):
        a, b = rows[0][key], rows[1][key]
        speedup = a / b if "per_s" in key else b / a  # rate up, time down
        print(f"{label:<24}{unit.format(a):>16}{unit.format(b):>16}{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
