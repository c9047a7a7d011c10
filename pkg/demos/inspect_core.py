"""
Reading relations from the core tensor
======================================

Large core entries tie together latent columns of different modes.  Ranking
them, either by magnitude or by how much each one improves the fit, is a
quick way to look for structure.
"""

import numpy as np

from sptucker import SolverConfig, run, top_core_entries
from sptucker.synthetic import random_tensor

# A (users x items x hours) style tensor with a planted interaction: users
# 0-19 rate items 0-9 highly in hours 0-5.
rng = np.random.default_rng(7)
data = random_tensor((60, 40, 24), 8000, seed=7)
idx = data.indices
boost = (idx[:, 0] < 20) & (idx[:, 1] < 10) & (idx[:, 2] < 6)
data = data.with_values(0.2 * data.values + 0.8 * boost)

model, _ = run(data, SolverConfig(ranks=(3, 3, 3), max_iters=30, threads=1, seed=0))

print("by |value|:")
for e in top_core_entries(model, 3):
    print("  ", e.index, f"{e.value:+.3f}")

# A positive partial error means the fit is better without that entry;
# these are the entries the approx variant would drop first.
print("by partial error:")
for e in top_core_entries(model, 3, "by_partial_error", data):
    print("  ", e.index, f"{e.value:+.3f}", f"score {e.score:+.3f}")

# The latent column behind the strongest entry loads on the planted users.
j_user = top_core_entries(model, 1)[0].index[0]
loading = np.abs(model.factors[0][:, j_user])
print("planted users' share of that column:", f"{loading[:20].sum() / loading.sum():.2f}")
