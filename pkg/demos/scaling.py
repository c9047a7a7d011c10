"""
Time per iteration against the number of observations
=====================================================

One iteration costs time proportional to the number of observed entries
(plus a per-row solve term), and the row updates share out across worker
threads.  This script measures both on synthetic data.
"""

import os

import numpy as np

from sptucker import SolverConfig, run
from sptucker.synthetic import random_tensor


def seconds_per_iteration(tensor, threads):
    config = SolverConfig(ranks=(4, 4, 4), max_iters=3, tol=1e-12, threads=threads)
    _, stats = run(tensor, config)
    return float(np.median(stats.seconds))


dims = (100_000,) * 3
seconds_per_iteration(random_tensor((50, 50, 50), 1000), 1)  # compile kernels

sizes = [10**4, 10**5, 10**6]
times = [seconds_per_iteration(random_tensor(dims, m, seed=m), 4) for m in sizes]
for m, t in zip(sizes, times):
    print(f"|Omega| = {m:>8d}: {t:.3f} s/iteration")
print(f"log-log slope: {np.polyfit(np.log(sizes), np.log(times), 1)[0]:.2f}")

# Thread scaling only shows on a machine with several cores.
big = random_tensor(dims, 10**6, seed=1)
base = seconds_per_iteration(big, 1)
for t in (2, 4, 8):
    print(f"{t} workers: {base / seconds_per_iteration(big, t):.2f}x "
          f"({os.cpu_count()} CPUs available)")
