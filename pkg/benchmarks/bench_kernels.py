"""Wall-clock comparison of the numba and numpy backends.

    python benchmarks/bench_kernels.py [--replicates 200] [--n 10000]

Runs the simulation replicate loop and the inverse normal CDF on both
backends, after one warm-up call so numba compile time is excluded.
"""

import argparse
import time

import numpy as np

from vrteh import kernels
from vrteh.simulation import ToyModelConfig, run_simulation


def timed(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--n", type=int, default=10_000)
    args = ap.parse_args()

    backends = [kernels.numpy_backend]
    if kernels.HAVE_NUMBA:
        backends.append(kernels.numba_backend)
    cfg = ToyModelConfig(n_units=args.n)
    u = kernels.uniforms(np.random.default_rng(0), 2_000_000)

    rows = []
    for be in backends:
        run_simulation(cfg, 2, backend=be)
        be.ndtri(u[:10])
        sim = timed(lambda: run_simulation(cfg, args.replicates, backend=be))
        inv = timed(lambda: be.ndtri(u))
        rows.append((be.name, sim, inv))

    print(f"{'backend':<8} {'simulate (s)':>13} {'ndtri 2e6 (s)':>14}")
    for name, sim, inv in rows:
        print(f"{name:<8} {sim:>13.3f} {inv:>14.3f}")
    if len(rows) == 2:
        print(f"speedup  {rows[0][1] / rows[1][1]:>13.1f}x {rows[0][2] / rows[1][2]:>13.1f}x")


if __name__ == "__main__":
    main()
