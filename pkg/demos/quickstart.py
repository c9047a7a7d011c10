"""
Factorizing a sparse tensor
===========================

Fit a Tucker model to a partially observed three-way tensor and use it to
fill in entries that were never observed.
"""

import numpy as np

from sptucker import SolverConfig, predict, reconstruction_error, run, test_rmse
from sptucker.synthetic import planted_tensor

# A hidden rank-(3, 3, 3) model generates the data.  We observe 6000 of its
# 64000 cells and hold out 600 more for testing.
train, test, truth = planted_tensor((40, 40, 40), (3, 3, 3), n_train=6000, n_test=600, seed=0)
print(f"observed {train.nnz} of {np.prod(train.dims)} cells")

# Only the observed entries enter the fit.  Every factor row is solved in
# closed form from the entries that touch it.
config = SolverConfig(ranks=(3, 3, 3), lam=0.01, max_iters=40, tol=1e-6, threads=1, seed=1)
model, stats = run(train, config)

print(f"iterations: {stats.iterations} ({stats.stop_reason})")
print(f"training error: {stats.initial_error:.3f} -> {reconstruction_error(train, model):.4f}")
print(f"held-out RMSE: {test_rmse(test, model):.4f}")

# The returned factors have orthonormal columns.
for n, a in enumerate(model.factors):
    print(f"mode {n}: max |A^T A - I| = {np.abs(a.T @ a - np.eye(a.shape[1])).max():.1e}")

# Predict a few cells nobody observed.
cells = np.array([[0, 0, 0], [10, 20, 30], [39, 39, 39]])
print(np.column_stack([cells, predict(model, cells), predict(truth, cells)]))
