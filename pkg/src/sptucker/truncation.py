"""Core-tensor pruning by partial reconstruction error.

The partial error of a core entry is the change in squared reconstruction
error caused by keeping it, i.e. error with the entry minus error without it.
Entries with the largest partial error hurt the fit most and are removed
first.
"""

import logging
import math

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError
from .evaluation import _ranked, predict
from .parallel import parallel_for
from .tensor import CoreTensor, Model

log = logging.getLogger(__name__)


def partial_errors(tensor, model, threads=1):
    """Partial reconstruction error of every stored core entry.

    Reconstructions of all observed entries are materialised once; each
    entry's score is then a single pass over the observations.
    """
    model.check(tensor)
    recon = predict(model, tensor.indices, threads)
    out = np.empty(model.core.nnz)
    args = model.kernel_args()
    parallel_for(
        lambda s, e, w: _kernels.partial_error_range(
            s, e, tensor.indices, tensor.values, recon, *args, out),
        model.core.nnz, threads, "dynamic", chunk=1)
    return out


def partial_error(tensor, model, beta):
    """Partial reconstruction error of the core entry at coordinate ``beta``."""
    pos = model.core.position(beta)
    if pos < 0:
        raise InvalidArgumentError(f"core has no entry at {tuple(beta)}")
    recon = predict(model, tensor.indices)
    out = np.empty(model.core.nnz)
    _kernels.partial_error_range(pos, pos + 1, tensor.indices, tensor.values, recon,
                                 *model.kernel_args(), out)
    return float(out[pos])


def removal_count(p, size):
    """floor(p * size), capped so at least one entry survives."""
    # round first so p*size = 28.999999999999996 counts as 29
    return max(0, min(size - 1, math.floor(round(p * size, 9))))


def select_removed(scores, core, p):
    """Positions of the entries to drop: the top floor(p|G|) by score."""
    k = removal_count(p, core.nnz)
    return np.sort(_ranked(scores, core)[:k])


def truncate_core(tensor, model, p, threads=1, scores=None):
    """Model whose core lacks its floor(p|G|) noisiest entries.

    Factor matrices are shared with the input model's values (copied).  A
    single-entry core is returned unchanged.
    """
    if not 0 < p < 1:
        raise InvalidArgumentError(f"truncation rate must be in (0, 1), got {p}")
    core = model.core
    if core.nnz < 2:
        log.warning("core has a single entry; truncation skipped")
        return model.copy()
    if scores is None:
        scores = partial_errors(tensor, model, threads)
    removed = select_removed(scores, core, p)
    keep = np.ones(core.nnz, dtype=bool)
    keep[removed] = False
    new_core = CoreTensor(core.indices[keep], core.values[keep], core.dims)
    return Model(new_core, [a.copy() for a in model.factors])
