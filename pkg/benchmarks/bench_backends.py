"""Compare the compiled and numpy oscillator kernels on one calibration-sized batch.

    python benchmarks/bench_backends.py [--runs 288] [--repeat 3]
"""
import argparse
import time

import numpy as np

from osc_conn import _backend
from osc_conn.dynamics import SimConfig, sample_dom


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=288, help="batch rows (18 cases x 16 seeds)")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--coupling", type=float, default=1.0)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    phases = rng.uniform(0, 2 * np.pi, (args.runs, 25))
    omegas = 2 * np.pi * (4.0 + 0.05 * rng.integers(0, 21, (args.runs, 25)))
    cfg = SimConfig()
    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    results = {}
    for name in backends:
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            dom, r = sample_dom(phases, omegas, args.coupling, cfg, backend=name)
            best = min(best, time.perf_counter() - t0)
        results[name] = (best, dom)
        steps = args.runs * cfg.sample_position()[0]
        print(f"{name:7s} {best:8.3f} s  {steps / best / 1e6:7.2f} M oscillator-array steps/s")
    if len(results) == 2:
        diff = np.max(np.abs(results["python"][1] - results["cython"][1]))
        print(f"speedup {results['python'][0] / results['cython'][0]:.1f}x, "
              f"max |dom difference| {diff:.2e} V")
    else:
        print("compiled kernel not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
