"""
Default, cache and approx variants
==================================

The three update variants trade memory for time.  ``default`` recomputes
every product on the fly, ``cache`` keeps one product per observed entry and
core entry, and ``approx`` prunes the core entries that hurt the fit most.
"""

import time

from sptucker import SolverConfig, run, test_rmse
from sptucker.solver import cache_bytes
from sptucker.synthetic import planted_tensor

train, test, _ = planted_tensor((60, 60, 60), (4, 4, 4), n_train=20000, n_test=2000, seed=3)

# Warm up the compiled kernels so the timings below are fair.
run(train, SolverConfig(ranks=(2, 2, 2), max_iters=1, threads=1, variant="cache"))

print(f"cache table size: {cache_bytes(train.nnz, 64) / 2**20:.1f} MiB")
for variant in ("default", "cache", "approx"):
    config = SolverConfig(ranks=(4, 4, 4), variant=variant, truncation_rate=0.2,
                          max_iters=10, tol=1e-6, threads=1, seed=0)
    start = time.perf_counter()
    model, stats = run(train, config)
    elapsed = time.perf_counter() - start
    print(f"{variant:8s} {elapsed:6.2f}s  error {stats.errors[-1]:.4f}  "
          f"RMSE {test_rmse(test, model):.4f}  core {stats.core_nnz[0]}->{stats.core_nnz[-1]}")

# default and cache take the same steps; only their cost differs.  The
# cache replaces N-1 multiplications per term with one division plus a
# rescale after each mode, so it pays off as the order grows.  approx keeps
# shrinking the core: later iterations get cheaper, at some cost in accuracy.
