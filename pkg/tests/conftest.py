import numpy as np
import pytest

from sptucker import CoreTensor, Model, SparseTensor
from sptucker.synthetic import sample_coordinates


def random_model(dims, ranks, seed, density=1.0, signed=False):
    """Model with uniform factors and a core keeping about ``density`` of its cells."""
    rng = np.random.default_rng(seed)
    low = -1.0 if signed else 0.0
    factors = [rng.uniform(low, 1.0, (d, j)) for d, j in zip(dims, ranks)]
    dense = rng.uniform(low, 1.0, ranks)
    if density < 1.0:
        mask = rng.random(ranks) < density
        mask.flat[0] = True
        dense = np.where(mask, dense, 0.0)
        core = CoreTensor(np.argwhere(mask), dense[mask], ranks)
    else:
        core = CoreTensor.from_dense(dense)
    return Model(core, factors)


def random_tensor(dims, nnz, seed):
    rng = np.random.default_rng(seed)
    idx = sample_coordinates(dims, nnz, rng)
    return SparseTensor(idx, rng.random(nnz), dims)


def random_instance(seed, orders=(2, 3, 4), max_dim=20, max_rank=4, max_nnz=500):
    """Small random (tensor, model) pair with I_n >= J_n."""
    rng = np.random.default_rng(seed)
    order = int(rng.choice(orders))
    ranks = tuple(int(j) for j in rng.integers(1, max_rank + 1, order))
    dims = tuple(int(max(j, d)) for j, d in zip(ranks, rng.integers(3, max_dim + 1, order)))
    total = int(np.prod(dims))
    nnz = int(min(total, rng.integers(20, max_nnz + 1)))
    return random_tensor(dims, nnz, seed + 1000), random_model(dims, ranks, seed + 2000)


@pytest.fixture
def small_case():
    tensor = random_tensor((6, 5, 4), 60, seed=3)
    model = random_model((6, 5, 4), (3, 2, 2), seed=4)
    return tensor, model


#: PASS/FAIL lines from the acceptance module, echoed after the run.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
