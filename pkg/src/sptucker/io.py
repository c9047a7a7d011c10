"""Text file formats and dataset preparation.

COO files hold one observed entry per line: N whitespace-separated 1-based
indices followed by the value.  Blank lines and lines starting with ``#``
are skipped.  A model bundle is a directory with ``factor_<n>.tsv`` (n from
1), ``core.coo`` and a ``meta`` file of ``key=value`` lines.
"""

import math
import os
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError, ParseError, ValidationError
from .tensor import CoreTensor, Model, SparseTensor


def fmt_real(x):
    return format(float(x), ".17g")


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            yield lineno, text.split()


def _parse_index(token, lineno, zero_based):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"index {token!r} is not an integer", lineno) from None
    lowest = 0 if zero_based else 1
    if value < lowest:
        raise ParseError(f"index {value} is below {lowest}", lineno)
    return value - lowest


def read_coo(path, expected_dims=None, zero_based=False):
    """Read a COO text file into a :class:`SparseTensor` (0-based in memory)."""
    coords = []
    values = []
    lines = []
    order = None
    for lineno, tokens in _data_lines(path):
        if order is None:
            if len(tokens) < 3:
                raise ParseError(f"expected at least 2 indices and a value, got {len(tokens)} tokens",
                                 lineno)
            order = len(tokens) - 1
        elif len(tokens) != order + 1:
            raise ParseError(f"expected {order + 1} tokens, got {len(tokens)}", lineno)
        coords.append([_parse_index(t, lineno, zero_based) for t in tokens[:-1]])
        try:
            value = float(tokens[-1])
        except ValueError:
            raise ParseError(f"value {tokens[-1]!r} is not a number", lineno) from None
        if not math.isfinite(value):
            raise ParseError(f"value {tokens[-1]!r} is not finite", lineno)
        values.append(value)
        lines.append(lineno)
    if order is None:
        raise ParseError(f"{path}: no data lines")
    idx = np.array(coords, dtype=np.int64)
    if expected_dims is not None:
        dims = tuple(int(d) for d in expected_dims)
        if len(dims) != order:
            raise ValidationError(f"--dims gives {len(dims)} modes but the file has {order}")
        over = idx >= np.array(dims)
        if over.any():
            k = int(np.flatnonzero(over.any(axis=1))[0])
            raise ValidationError(f"line {lines[k]}: index exceeds dims {dims}")
    else:
        dims = tuple(int(d) + 1 for d in idx.max(axis=0))
    _reject_duplicates(idx, lines)
    return SparseTensor(idx, np.array(values), dims)


def _reject_duplicates(idx, lines):
    seen = {}
    for k, row in enumerate(map(tuple, idx.tolist())):
        first = seen.setdefault(row, k)
        if first != k:
            raise ValidationError(
                f"duplicate coordinate on lines {lines[first]} and {lines[k]}")


def read_indices(path, order=None, zero_based=False):
    """Read an index-only COO file (N tokens per line).

    Returns the 0-based index array and the source line numbers.
    """
    coords = []
    lines = []
    for lineno, tokens in _data_lines(path):
        if order is None:
            order = len(tokens)
        if len(tokens) != order:
            raise ParseError(f"expected {order} indices, got {len(tokens)}", lineno)
        coords.append([_parse_index(t, lineno, zero_based) for t in tokens])
        lines.append(lineno)
    idx = np.array(coords, dtype=np.int64).reshape(len(coords), order or 0)
    return idx, lines


def write_coo(tensor, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row, v in zip(tensor.indices.tolist(), tensor.values.tolist()):
            fh.write(" ".join(str(i + 1) for i in row) + " " + fmt_real(v) + "\n")


def _write_core(core, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row, v in zip(core.indices.tolist(), core.values.tolist()):
            fh.write(" ".join(str(i + 1) for i in row) + " " + fmt_real(v) + "\n")


def _fmt_meta_value(value):
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return fmt_real(value)
    return str(value)


def write_model(model, meta, directory):
    """Write ``model`` and ``meta`` as a bundle directory (created if needed)."""
    os.makedirs(directory, exist_ok=True)
    for n, a in enumerate(model.factors, 1):
        with open(os.path.join(directory, f"factor_{n}.tsv"), "w",
                  encoding="utf-8", newline="\n") as fh:
            for r in a.tolist():
                fh.write("\t".join(fmt_real(v) for v in r) + "\n")
    _write_core(model.core, os.path.join(directory, "core.coo"))
    full = dict(meta or {})
    full.update(order=model.order, dims=list(model.dims), ranks=list(model.ranks))
    keys = ["order", "dims", "ranks", "lambda", "variant", "iterations_run",
            "final_error", "seed"]
    keys += sorted(k for k in full if k not in keys)
    with open(os.path.join(directory, "meta"), "w", encoding="utf-8", newline="\n") as fh:
        for k in keys:
            if k in full:
                fh.write(f"{k}={_fmt_meta_value(full[k])}\n")


def _int_list(text, key):
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise ValidationError(f"meta key {key!r} is not a comma-separated integer list") from None


def read_model(directory):
    """Load a bundle written by :func:`write_model`.  Returns ``(model, meta)``."""
    meta_path = os.path.join(directory, "meta")
    if not os.path.isfile(meta_path):
        raise ValidationError(f"{directory}: missing meta file")
    meta = {}
    with open(meta_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("meta line is not key=value", lineno)
            k, v = line.split("=", 1)
            meta[k.strip()] = v.strip()
    for key in ("order", "dims", "ranks"):
        if key not in meta:
            raise ValidationError(f"meta is missing {key!r}")
    order = int(meta["order"])
    dims = _int_list(meta["dims"], "dims")
    ranks = _int_list(meta["ranks"], "ranks")
    if len(dims) != order or len(ranks) != order:
        raise ValidationError("meta dims/ranks do not match the order")
    factors = []
    for n in range(1, order + 1):
        path = os.path.join(directory, f"factor_{n}.tsv")
        if not os.path.isfile(path):
            raise ValidationError(f"missing factor file factor_{n}.tsv")
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rows.append([float(t) for t in line.split("\t")])
                except ValueError:
                    raise ParseError(f"factor_{n}.tsv has a non-numeric value", lineno) from None
        a = np.array(rows, dtype=np.float64)
        if a.shape != (dims[n - 1], ranks[n - 1]):
            raise ValidationError(
                f"factor_{n}.tsv has shape {a.shape}, meta says ({dims[n - 1]}, {ranks[n - 1]})")
        factors.append(a)
    core_path = os.path.join(directory, "core.coo")
    if not os.path.isfile(core_path):
        raise ValidationError("missing core.coo")
    try:
        core_t = read_coo(core_path, expected_dims=ranks)
    except ValidationError as exc:
        raise ValidationError(f"core.coo disagrees with meta ranks {ranks}: {exc}") from None
    if core_t.order != order:
        raise ValidationError(f"core.coo has order {core_t.order}, meta says {order}")
    core = CoreTensor(core_t.indices, core_t.values, ranks)
    return Model(core, factors), meta


def split_train_test(tensor, test_fraction, seed):
    """Seeded random partition of the observed entries.

    The test part gets ``round(test_fraction * nnz)`` entries (at least one,
    leaving at least one for training).  Both parts keep input order.
    """
    if not 0 < test_fraction < 1:
        raise InvalidArgumentError(f"test fraction must be in (0, 1), got {test_fraction}")
    nnz = tensor.nnz
    if nnz < 2:
        raise InvalidArgumentError("need at least two entries to split")
    n_test = min(nnz - 1, max(1, math.floor(test_fraction * nnz + 0.5)))
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(nnz)
    test_pos = np.sort(perm[:n_test])
    train_pos = np.sort(perm[n_test:])
    return tensor.subset(train_pos), tensor.subset(test_pos)


class Normalized(NamedTuple):
    tensor: SparseTensor
    min: float
    max: float
    degenerate: bool


def normalize_values(tensor):
    """Min-max scale values into [0, 1].

    Constant-valued tensors map to all zeros with ``degenerate=True``.
    """
    lo = float(tensor.values.min())
    hi = float(tensor.values.max())
    if hi == lo:
        return Normalized(tensor.with_values(np.zeros(tensor.nnz)), lo, hi, True)
    return Normalized(tensor.with_values((tensor.values - lo) / (hi - lo)), lo, hi, False)


def denormalize(values, lo, hi):
    return np.asarray(values) * (hi - lo) + lo
