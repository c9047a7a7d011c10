"""Accuracy metrics and core-tensor inspection."""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError
from .parallel import fixed_chunks, parallel_for

#: Entries per partial sum.  Independent of the worker count so that the
#: combined error is bit-identical for any number of threads.
ERROR_CHUNK = 4096


def predict(model, indices, threads=1):
    """Predicted values at 0-based coordinates ``indices`` (shape (k, N))."""
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    if idx.ndim != 2 or idx.shape[1] != model.order:
        raise InvalidArgumentError(f"indices must have shape (k, {model.order})")
    if idx.shape[0]:
        bad = (idx < 0) | (idx >= np.array(model.dims))
        if bad.any():
            row = int(np.flatnonzero(bad.any(axis=1))[0])
            raise InvalidArgumentError(f"index {tuple(idx[row])} out of range for dims {model.dims}")
    out = np.empty(idx.shape[0])
    args = model.kernel_args()
    parallel_for(lambda s, e, w: _kernels.reconstruct_range(s, e, idx, *args, out),
                 idx.shape[0], threads, "static")
    return out


def squared_error(tensor, model, threads=1):
    """Sum of squared residuals over the observed entries."""
    chunks = fixed_chunks(tensor.nnz, ERROR_CHUNK)
    partial = np.zeros(len(chunks))
    args = model.kernel_args()

    def body(c0, c1, worker):
        for c in range(c0, c1):
            s, e = chunks[c]
            partial[c] = _kernels.squared_residual_range(
                s, e, tensor.indices, tensor.values, *args)

    parallel_for(body, len(chunks), threads, "static")
    total = 0.0
    for p in partial:
        total += p
    return total


def reconstruction_error(tensor, model, threads=1):
    """Square root of the summed squared residuals over observed entries."""
    model.check(tensor)
    return math.sqrt(squared_error(tensor, model, threads))


def regularizer(model):
    return float(sum(np.sum(a * a) for a in model.factors))


def loss(tensor, model, lam, threads=1):
    """Training objective: squared error plus ``lam`` times squared factor norms."""
    model.check(tensor)
    return squared_error(tensor, model, threads) + lam * regularizer(model)


def test_rmse(test, model, threads=1):
    """Root mean squared prediction error over held-out entries."""
    if test is None or test.nnz == 0:
        raise InvalidArgumentError("test set is empty")
    model.check(test)
    return math.sqrt(squared_error(test, model, threads) / test.nnz)


test_rmse.__test__ = False  # keep pytest from collecting the import


@dataclass
class EvalReport:
    reconstruction_error: float
    n_train: int
    test_rmse: float = None
    n_test: int = 0
    extra: dict = field(default_factory=dict)

    FIELDS = ("reconstruction_error", "test_rmse", "n_train", "n_test")

    def _values(self):
        return {
            "reconstruction_error": _fmt(self.reconstruction_error),
            "test_rmse": "" if self.test_rmse is None else _fmt(self.test_rmse),
            "n_train": str(self.n_train),
            "n_test": str(self.n_test),
        }

    def to_text(self):
        vals = self._values()
        lines = [f"{k}={vals[k]}" for k in self.FIELDS if vals[k] != ""]
        return "\n".join(lines) + "\n"

    @classmethod
    def csv_header(cls):
        return ",".join(cls.FIELDS)

    def to_csv_row(self):
        vals = self._values()
        return ",".join(vals[k] for k in self.FIELDS)


def _fmt(x):
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ScoredCoreEntry:
    index: tuple
    value: float
    score: float


def _ranked(scores, core):
    """Core positions by descending score, ties by ascending linear index."""
    return np.lexsort((core.linear_index(), -np.asarray(scores)))


def top_core_entries(model, k, ranking="by_value", tensor=None, threads=1):
    """The ``k`` strongest core entries.

    ``by_value`` ranks by absolute value; ``by_partial_error`` ranks by the
    partial reconstruction error of each entry on ``tensor``.
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    core = model.core
    if ranking == "by_value":
        scores = np.abs(core.values)
    elif ranking == "by_partial_error":
        if tensor is None:
            raise InvalidArgumentError("ranking by partial error needs the data tensor")
        from .truncation import partial_errors
        scores = partial_errors(tensor, model, threads)
    else:
        raise InvalidArgumentError(f"unknown ranking {ranking!r}")
    order = _ranked(scores, core)[:k]
    return [ScoredCoreEntry(tuple(int(j) for j in core.indices[b]),
                            float(core.values[b]), float(scores[b])) for b in order]
