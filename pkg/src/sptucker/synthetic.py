"""Synthetic sparse tensors for tests, demos and scaling runs."""

import numpy as np

from .errors import InvalidArgumentError
from .evaluation import predict
from .tensor import SparseTensor, init_model


def sample_coordinates(dims, count, rng):
    """``count`` distinct coordinates drawn uniformly from the index grid."""
    dims = [int(d) for d in dims]
    total = 1
    for d in dims:
        total *= d
    if count > total:
        raise InvalidArgumentError(f"cannot draw {count} distinct cells from {total}")
    if total < 2**62:
        if count > total // 4:
            lin = rng.choice(total, size=count, replace=False)
        else:
            lin = np.unique(rng.integers(0, total, size=count))
            while lin.size < count:
                more = rng.integers(0, total, size=count - lin.size)
                lin = np.unique(np.concatenate([lin, more]))
            lin = rng.permutation(lin)[:count]
        return np.stack(np.unravel_index(lin, dims), axis=1).astype(np.int64)
    idx = np.unique(np.stack([rng.integers(0, d, size=count) for d in dims], axis=1), axis=0)
    while idx.shape[0] < count:
        more = np.stack([rng.integers(0, d, size=count) for d in dims], axis=1)
        idx = np.unique(np.concatenate([idx, more]), axis=0)
    return rng.permutation(idx)[:count]


def random_tensor(dims, nnz, seed=0):
    """Sparse tensor with ``nnz`` random cells holding uniform [0, 1) values."""
    rng = np.random.default_rng(seed)
    idx = sample_coordinates(dims, nnz, rng)
    return SparseTensor(idx, rng.random(nnz), dims)


def planted_tensor(dims, ranks, n_train, n_test=0, seed=0):
    """Entries of an exact low-rank Tucker tensor.

    A random model (factors and core uniform in [0, 1)) is evaluated at
    ``n_train + n_test`` distinct random cells.  Returns
    ``(train, test, model)``; ``test`` is None when ``n_test == 0``.
    """
    model = init_model(dims, ranks, seed)
    rng = np.random.default_rng([seed, 1])
    idx = sample_coordinates(dims, n_train + n_test, rng)
    values = predict(model, idx)
    train = SparseTensor(idx[:n_train], values[:n_train], dims)
    test = SparseTensor(idx[n_train:], values[n_train:], dims) if n_test else None
    return train, test, model
