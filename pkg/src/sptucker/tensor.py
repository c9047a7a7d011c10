"""Sparse observed tensors, coordinate-list core tensors and Tucker models.

Library-level indices are 0-based (numpy convention).  The 1-based
convention of the on-disk formats is handled in :mod:`sptucker.io`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, ValidationError

#: PRNG used by :func:`init_model`.  numpy's PCG64 bit generator (PCG XSL RR
#: 128/64) behind ``numpy.random.Generator``; ``Generator.random`` streams are
#: covered by numpy's stream-compatibility policy for a fixed bit generator.
PRNG_ALGORITHM = "numpy.random.PCG64"


def _as_index_array(indices, order=None):
    idx = np.asarray(indices)
    if idx.ndim == 1 and order is not None and idx.size == order:
        idx = idx.reshape(1, order)
    if idx.ndim != 2:
        raise InvalidArgumentError(f"indices must be a 2-D array, got shape {idx.shape}")
    if idx.size and not np.issubdtype(idx.dtype, np.integer):
        if not np.all(np.mod(idx, 1) == 0):
            raise InvalidArgumentError("indices must be integers")
    return np.ascontiguousarray(idx, dtype=np.int64)


def _linearize(idx, dims):
    """C-order linear index of each row of ``idx``, or None on int64 overflow."""
    total = 1
    for d in dims:
        total *= int(d)
    if total >= 2**62:
        return None
    strides = np.ones(len(dims), dtype=np.int64)
    for n in range(len(dims) - 2, -1, -1):
        strides[n] = strides[n + 1] * int(dims[n + 1])
    return idx @ strides


def _find_duplicate(idx, dims):
    """Return a pair of positions holding the same coordinate, or None."""
    if len(idx) < 2:
        return None
    lin = _linearize(idx, dims)
    if lin is None:
        _, inverse = np.unique(idx, axis=0, return_inverse=True)
        lin = inverse.ravel()
    order = np.argsort(lin, kind="stable")
    same = np.flatnonzero(lin[order][1:] == lin[order][:-1])
    if same.size == 0:
        return None
    k = same[0]
    return int(order[k]), int(order[k + 1])


def _check_bounds(idx, dims, what):
    if idx.shape[1] != len(dims):
        raise InvalidArgumentError(
            f"{what} indices have {idx.shape[1]} modes but dims has {len(dims)}"
        )
    if idx.size == 0:
        return
    lo = idx.min(axis=0)
    hi = idx.max(axis=0)
    for n, d in enumerate(dims):
        if lo[n] < 0 or hi[n] >= d:
            raise InvalidArgumentError(
                f"{what} index out of range in mode {n}: valid range is [0, {d})"
            )


class SparseTensor:
    """Observed entries of an order-N tensor in coordinate (COO) form.

    Parameters
    ----------
    indices : (nnz, N) int array
        0-based coordinates of the observed entries, one row per entry.
    values : (nnz,) float array
        Observed values.
    dims : sequence of int
        Mode lengths ``I_1..I_N``.  Inferred from the largest index per mode
        when omitted.

    Duplicate coordinates are rejected rather than summed.
    """

    def __init__(self, indices, values, dims=None):
        values = np.ascontiguousarray(values, dtype=np.float64).ravel()
        if dims is not None:
            dims = tuple(int(d) for d in dims)
        idx = _as_index_array(indices, None if dims is None else len(dims))
        if dims is None:
            if idx.shape[0] == 0:
                raise InvalidArgumentError("cannot infer dims from an empty tensor")
            dims = tuple(int(d) + 1 for d in idx.max(axis=0))
        if len(dims) < 2:
            raise InvalidArgumentError(f"tensor order must be >= 2, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise InvalidArgumentError(f"dims must be positive, got {dims}")
        if idx.shape[0] != values.shape[0]:
            raise InvalidArgumentError(
                f"{idx.shape[0]} index rows but {values.shape[0]} values"
            )
        if idx.shape[0] == 0:
            raise InvalidArgumentError("a sparse tensor needs at least one observed entry")
        _check_bounds(idx, dims, "tensor")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("tensor values must be finite")
        dup = _find_duplicate(idx, dims)
        if dup is not None:
            raise ValidationError(
                f"duplicate coordinate {tuple(idx[dup[0]])} at entries {dup[0]} and {dup[1]}"
            )
        self.indices = idx
        self.values = values
        self.dims = dims

    @property
    def order(self):
        return len(self.dims)

    @property
    def nnz(self):
        return self.values.shape[0]

    def __len__(self):
        return self.nnz

    def __repr__(self):
        return f"SparseTensor(dims={self.dims}, nnz={self.nnz})"

    def subset(self, positions):
        """Tensor holding only the entries at ``positions`` (same dims)."""
        positions = np.asarray(positions, dtype=np.int64)
        return SparseTensor(self.indices[positions], self.values[positions], self.dims)

    def with_values(self, values):
        return SparseTensor(self.indices, values, self.dims)


@dataclass(frozen=True)
class ModeSlices:
    """Per-mode partition of entry positions by their coordinate in that mode.

    For mode ``n`` the positions of entries whose nth coordinate is ``i`` are
    ``perm[n][ptr[n][i]:ptr[n][i + 1]]``, in input order.
    """

    perm: tuple
    ptr: tuple

    def slice(self, n, i):
        return self.perm[n][self.ptr[n][i]:self.ptr[n][i + 1]]

    def sizes(self, n):
        return np.diff(self.ptr[n])


def build_mode_slices(tensor):
    """Group entry positions by coordinate, separately for every mode."""
    perms = []
    ptrs = []
    for n, d in enumerate(tensor.dims):
        col = tensor.indices[:, n]
        perm = np.argsort(col, kind="stable").astype(np.int64)
        ptr = np.zeros(d + 1, dtype=np.int64)
        np.cumsum(np.bincount(col, minlength=d), out=ptr[1:])
        perms.append(perm)
        ptrs.append(ptr)
    return ModeSlices(tuple(perms), tuple(ptrs))


class CoreTensor:
    """Core tensor stored as a coordinate list over ``dims = (J_1..J_N)``.

    Entries are kept sorted by C-order linear index.
    """

    def __init__(self, indices, values, dims):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise InvalidArgumentError(f"core dims must be positive, got {dims}")
        idx = _as_index_array(indices, len(dims))
        values = np.ascontiguousarray(values, dtype=np.float64).ravel()
        if idx.shape[0] != values.shape[0]:
            raise InvalidArgumentError(
                f"{idx.shape[0]} core index rows but {values.shape[0]} values"
            )
        if idx.shape[0] == 0:
            raise InvalidArgumentError("core tensor must keep at least one entry")
        _check_bounds(idx, dims, "core")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("core values must be finite")
        lin = _linearize(idx, dims)
        order = np.argsort(lin, kind="stable")
        if np.any(np.diff(lin[order]) == 0):
            raise ValidationError("duplicate core coordinate")
        self.indices = np.ascontiguousarray(idx[order])
        self.values = np.ascontiguousarray(values[order])
        self.dims = dims

    @classmethod
    def from_dense(cls, array, drop_below=None):
        """Coordinate list of a dense array, optionally dropping tiny entries.

        Entries with ``|value| <= drop_below`` are omitted; at least one entry
        (the largest in magnitude) is always kept.
        """
        array = np.asarray(array, dtype=np.float64)
        if drop_below is None:
            mask = np.ones(array.shape, dtype=bool)
        else:
            mask = np.abs(array) > drop_below
            if not mask.any():
                mask.flat[np.argmax(np.abs(array))] = True
        idx = np.argwhere(mask)
        return cls(idx, array[mask], array.shape)

    @property
    def nnz(self):
        return self.values.shape[0]

    @property
    def order(self):
        return len(self.dims)

    def linear_index(self):
        return _linearize(self.indices, self.dims)

    def dense(self):
        out = np.zeros(self.dims)
        out[tuple(self.indices.T)] = self.values
        return out

    def position(self, index):
        """Position of core coordinate ``index`` in the entry list, or -1."""
        index = np.asarray(index, dtype=np.int64)
        if index.shape != (self.order,):
            return -1
        hit = np.flatnonzero(np.all(self.indices == index, axis=1))
        return int(hit[0]) if hit.size else -1

    def copy(self):
        return CoreTensor(self.indices.copy(), self.values.copy(), self.dims)

    def __repr__(self):
        return f"CoreTensor(dims={self.dims}, nnz={self.nnz})"


class Model:
    """A core tensor together with one factor matrix per mode.

    All factor matrices live in one contiguous buffer so the compiled kernels
    can address them uniformly; ``factors[n]`` is a writable view of shape
    ``(I_n, J_n)``.
    """

    def __init__(self, core, factors):
        factors = [np.asarray(a, dtype=np.float64) for a in factors]
        if len(factors) != core.order:
            raise InvalidArgumentError(
                f"core has order {core.order} but {len(factors)} factor matrices were given"
            )
        for n, a in enumerate(factors):
            if a.ndim != 2:
                raise InvalidArgumentError(f"factor {n} must be 2-D")
            if a.shape[1] != core.dims[n]:
                raise InvalidArgumentError(
                    f"factor {n} has {a.shape[1]} columns but core dim is {core.dims[n]}"
                )
            if a.shape[0] < 1:
                raise InvalidArgumentError(f"factor {n} has no rows")
            if not np.all(np.isfinite(a)):
                raise InvalidArgumentError(f"factor {n} has non-finite values")
        sizes = [a.size for a in factors]
        self.offsets = np.zeros(len(factors), dtype=np.int64)
        self.offsets[1:] = np.cumsum(sizes)[:-1]
        self.buffer = np.empty(sum(sizes), dtype=np.float64)
        views = []
        for n, a in enumerate(factors):
            view = self.buffer[self.offsets[n]:self.offsets[n] + a.size].reshape(a.shape)
            view[...] = a
            views.append(view)
        self.factors = tuple(views)
        self.core = core

    @property
    def order(self):
        return len(self.factors)

    @property
    def dims(self):
        return tuple(a.shape[0] for a in self.factors)

    @property
    def ranks(self):
        return tuple(a.shape[1] for a in self.factors)

    @property
    def ranks_array(self):
        return np.array(self.ranks, dtype=np.int64)

    def copy(self):
        return Model(self.core.copy(), [a.copy() for a in self.factors])

    def kernel_args(self):
        """(buffer, offsets, ranks, core indices, core values) for the kernels."""
        return (self.buffer, self.offsets, self.ranks_array,
                self.core.indices, self.core.values)

    def check(self, tensor):
        """Raise ``ValidationError`` unless shapes agree with ``tensor``."""
        if tensor.order != self.order:
            raise ValidationError(
                f"tensor has order {tensor.order} but model has order {self.order}"
            )
        if tuple(tensor.dims) != self.dims:
            raise ValidationError(f"tensor dims {tensor.dims} != model dims {self.dims}")

    def __repr__(self):
        return f"Model(dims={self.dims}, ranks={self.ranks}, core_nnz={self.core.nnz})"


def init_model(dims, ranks, seed):
    """Random model with factor and core values uniform in [0, 1).

    Factor matrices are drawn first (mode order, row-major), then the dense
    core in C order, all from one ``PCG64(seed)`` stream.
    """
    dims = [int(d) for d in dims]
    ranks = [int(j) for j in ranks]
    if len(dims) != len(ranks):
        raise InvalidArgumentError(f"{len(dims)} dims but {len(ranks)} ranks")
    if any(d < 1 for d in dims) or any(j < 1 for j in ranks):
        raise InvalidArgumentError(f"dims and ranks must be >= 1, got {dims} and {ranks}")
    rng = np.random.Generator(np.random.PCG64(seed))
    factors = [rng.random((d, j)) for d, j in zip(dims, ranks)]
    core = CoreTensor.from_dense(rng.random(ranks))
    return Model(core, factors)


def reconstruct_entry(model, index):
    """Predicted value at one coordinate: sum over stored core entries of
    ``G[beta] * prod_n A_n[index[n], beta[n]]``."""
    index = np.asarray(index, dtype=np.int64).ravel()
    if index.shape[0] != model.order:
        raise InvalidArgumentError(f"index has {index.shape[0]} modes, model has {model.order}")
    for n, (i, d) in enumerate(zip(index, model.dims)):
        if not 0 <= i < d:
            raise InvalidArgumentError(f"index {i} out of range [0, {d}) in mode {n}")
    terms = model.core.values.copy()
    for n, a in enumerate(model.factors):
        terms *= a[index[n], model.core.indices[:, n]]
    return float(terms.sum())
