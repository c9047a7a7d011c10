"""Row-wise alternating least squares for sparse Tucker factorization.

Every iteration updates the factor matrices one mode at a time.  Within a
mode each row is the closed-form minimiser of the regularized loss restricted
to the observed entries in that row's slice, so rows are independent and are
updated in parallel.  The core tensor keeps its random initial values during
the iterations; it only changes when entries are pruned (``approx`` variant)
and in the final orthogonalization step.

Three variants share the loop:

``default``
    recomputes every core-weighted product on the fly (small memory).
``cache``
    memoises the per-(entry, core entry) products in a |Ω| x |G| table.
``approx``
    prunes the noisiest core entries after every iteration.
"""

from dataclasses import dataclass, field
import logging
import time

import numpy as np

from . import _kernels
from .errors import (
    InternalConsistencyError,
    InvalidArgumentError,
    NumericFailure,
    ResourceLimitError,
)
from .evaluation import reconstruction_error, regularizer
from .linalg import core_mode_product, thin_qr
from .parallel import parallel_for, row_chunk_size, run_workers, work_queue
from .tensor import Model, build_mode_slices, init_model
from .truncation import truncate_core

log = logging.getLogger(__name__)

VARIANTS = ("default", "cache", "approx")

#: Cached factor values at or below this magnitude are not divided by.
EPS_DIV = 1e-12


@dataclass
class SolverConfig:
    ranks: tuple
    lam: float = 0.01
    max_iters: int = 20
    tol: float = 1e-4
    variant: str = "default"
    truncation_rate: float = 0.2
    threads: int = 20
    seed: int = 0
    max_cache_bytes: int = 2**31
    max_seconds_per_iter: float = 7200.0
    debug: bool = False

    def validate(self, order=None):
        self.ranks = tuple(int(j) for j in self.ranks)
        if any(j < 1 for j in self.ranks):
            raise InvalidArgumentError(f"ranks must be >= 1, got {self.ranks}")
        if order is not None and len(self.ranks) != order:
            raise InvalidArgumentError(
                f"{len(self.ranks)} ranks given for an order-{order} tensor")
        if not self.lam > 0:
            raise InvalidArgumentError(f"lambda must be > 0, got {self.lam}")
        if self.max_iters < 1:
            raise InvalidArgumentError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be > 0, got {self.tol}")
        if self.variant not in VARIANTS:
            raise InvalidArgumentError(
                f"variant must be one of {', '.join(VARIANTS)}, got {self.variant!r}")
        if not 0 < self.truncation_rate < 1:
            raise InvalidArgumentError(
                f"truncation rate must be in (0, 1), got {self.truncation_rate}")
        if self.threads < 1:
            raise InvalidArgumentError(f"threads must be >= 1, got {self.threads}")
        if self.max_cache_bytes < 0:
            raise InvalidArgumentError("max_cache_bytes must be >= 0")
        return self


@dataclass
class IterationStats:
    """Per-iteration history of a run.

    ``errors`` holds the reconstruction error at the end of each iteration
    (after pruning for ``approx``) and ``losses`` the regularized objective
    at the same point; ``errors_before_truncation`` is filled only for
    ``approx``.  The objective, not the error, is what the row updates
    decrease monotonically.
    """

    initial_error: float = float("nan")
    initial_loss: float = float("nan")
    errors: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    errors_before_truncation: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    core_nnz: list = field(default_factory=list)
    mode_seconds: list = field(default_factory=list)
    truncation_skipped: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""

    @property
    def iterations(self):
        return len(self.errors)

    CSV_HEADER = "iteration,error,seconds,core_nnz"

    def to_csv(self):
        lines = [self.CSV_HEADER]
        for t, (err, sec, nnz) in enumerate(zip(self.errors, self.seconds, self.core_nnz), 1):
            lines.append(f"{t},{err:.17g},{sec:.6f},{nnz}")
        return "\n".join(lines) + "\n"


class CacheTable:
    """|Ω| x |G| table of full products ``G[b] * prod_k A_k[i_k, b_k]``."""

    def __init__(self, values, indices):
        self.values = values
        self.indices = indices

    @property
    def nbytes(self):
        return self.values.nbytes

    @property
    def shape(self):
        return self.values.shape


def cache_bytes(n_entries, core_nnz):
    return int(n_entries) * int(core_nnz) * 8


def precompute_cache(tensor, model, max_bytes=2**31, threads=1):
    """Fill the product cache from the current model.

    Raises ``ResourceLimitError`` when the table would exceed ``max_bytes``.
    """
    model.check(tensor)
    need = cache_bytes(tensor.nnz, model.core.nnz)
    if need > max_bytes:
        raise ResourceLimitError(
            f"cache table needs {need} bytes (|entries|={tensor.nnz} x |core|={model.core.nnz}"
            f" x 8) but the budget is {max_bytes}; use variant='default' instead")
    pres = np.empty((tensor.nnz, model.core.nnz))
    args = model.kernel_args()
    parallel_for(lambda s, e, w: _kernels.fill_cache(s, e, tensor.indices, *args, pres),
                 tensor.nnz, threads, "static")
    return CacheTable(pres, tensor.indices)


def verify_cache(cache, model, sample=32, seed=0, rtol=1e-10):
    """Spot-check ``sample`` random cache rows against direct recomputation."""
    n_rows = cache.values.shape[0]
    rows = np.random.default_rng(seed).choice(n_rows, size=min(sample, n_rows), replace=False)
    core = model.core
    for a in rows:
        expect = core.values.copy()
        for k, f in enumerate(model.factors):
            expect *= f[cache.indices[a, k], core.indices[:, k]]
        got = cache.values[a]
        if not np.allclose(got, expect, rtol=rtol, atol=1e-300):
            raise InternalConsistencyError(f"cache row {int(a)} is stale")


def compute_delta_direct(tensor, model, alpha, n):
    """Core-weighted product vector of observed entry ``alpha`` for mode ``n``."""
    out = np.empty(model.ranks[n])
    _kernels.delta_direct(tensor.indices, int(alpha), int(n), *model.kernel_args(), out)
    return out


def compute_delta_cached(cache, model, alpha, n):
    """Same as :func:`compute_delta_direct`, read from the product cache."""
    out = np.empty(model.ranks[n])
    _kernels.delta_cached(cache.values, cache.indices, int(alpha), int(n),
                          *model.kernel_args(), EPS_DIV, out)
    return out


def assemble_row_system(tensor, model, n, row, delta_provider=None, slices=None):
    """Normal-equation pieces ``B = sum d d^T`` and ``c = sum x d`` for one row.

    ``delta_provider(alpha)`` returns the product vector of entry ``alpha``;
    the direct computation is used when omitted.
    """
    if slices is None:
        slices = build_mode_slices(tensor)
    if delta_provider is None:
        def delta_provider(alpha):
            return compute_delta_direct(tensor, model, alpha, n)
    size = model.ranks[n]
    B = np.zeros((size, size))
    c = np.zeros(size)
    for alpha in slices.slice(n, row):
        d = delta_provider(alpha)
        B += np.outer(d, d)
        c += tensor.values[alpha] * d
    return B, c


def update_factor_matrix(tensor, model, n, config, cache=None, slices=None):
    """Replace every row of factor ``n`` by its regularized least-squares solution.

    Rows without observations become zero.  The update is written in place
    and the factor is returned.  With a cache the table is rescaled to the
    new factor afterwards.
    """
    if slices is None:
        slices = build_mode_slices(tensor)
    use_cache = cache is not None
    threads = config.threads
    size = model.ranks[n]
    n_rows = model.dims[n]
    args = model.kernel_args()
    perm, ptr = slices.perm[n], slices.ptr[n]
    old = model.factors[n].copy() if use_cache else None
    scratch = [(np.empty((size, size)), np.empty(size), np.empty(size), np.empty(size))
               for _ in range(min(threads, n_rows))]

    chunk = row_chunk_size(n_rows, threads)
    queue = work_queue(n_rows, chunk)
    failed = []

    def worker(w):
        b_mat, c_vec, delta, row = scratch[w]
        if use_cache:
            bad = _kernels.update_rows_cached_queue(
                queue, chunk, n_rows, n, perm, ptr, tensor.indices, tensor.values, *args,
                config.lam, cache.values, EPS_DIV, b_mat, c_vec, delta, row)
        else:
            bad = _kernels.update_rows_direct_queue(
                queue, chunk, n_rows, n, perm, ptr, tensor.indices, tensor.values, *args,
                config.lam, b_mat, c_vec, delta, row)
        if bad >= 0:
            failed.append(bad)

    run_workers(len(scratch), worker)
    if failed:
        bad = min(failed)
        raise NumericFailure(
            f"row system of mode {n}, row {bad} could not be factored", mode=n, row=bad)

    if use_cache:
        parallel_for(
            lambda s, e, w: _kernels.refresh_cache(
                s, e, n, tensor.indices, old, *args, cache.values, EPS_DIV),
            tensor.nnz, threads, "static")
        if config.debug:
            verify_cache(cache, model)
    return model.factors[n]


def _complete_orthonormal(q_used, n_extra):
    """``n_extra`` unit vectors orthogonal to the columns of ``q_used`` and to
    each other, taken from the standard basis by two-pass Gram-Schmidt."""
    basis = [q_used[:, k] for k in range(q_used.shape[1])]
    extra = []
    for k in range(q_used.shape[0]):
        if len(extra) == n_extra:
            break
        v = np.zeros(q_used.shape[0])
        v[k] = 1.0
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 0.5:
            v /= norm
            basis.append(v)
            extra.append(v)
    return np.column_stack(extra) if extra else np.zeros((q_used.shape[0], 0))


def _factor_qr(a, used):
    """QR of ``a`` restricted to the columns the core references.

    Unreferenced columns do not influence any reconstruction; their ``Q``
    columns are an orthonormal completion and their ``R`` rows/columns are 0.
    """
    if used.all():
        return thin_qr(a)
    size = a.shape[1]
    cols = np.flatnonzero(used)
    q_sub, r_sub = thin_qr(a[:, cols])
    q = np.empty_like(a)
    q[:, cols] = q_sub
    q[:, ~used] = _complete_orthonormal(q_sub, size - cols.size)
    r = np.zeros((size, size))
    r[np.ix_(cols, cols)] = r_sub
    return q, r


def orthogonalize(model):
    """Model with orthonormal factor columns and the same reconstructions.

    Each factor ``A = QR`` is replaced by ``Q`` and the core absorbs ``R``
    along that mode.  Columns that no core entry references (possible after
    pruning) are left out of the factorization and get arbitrary orthonormal
    replacements.
    """
    core = model.core
    factors = []
    for n, a in enumerate(model.factors):
        used = np.zeros(a.shape[1], dtype=bool)
        used[core.indices[:, n]] = True
        try:
            q, r = _factor_qr(a, used)
        except (NumericFailure, InvalidArgumentError) as exc:
            msg = f"cannot orthogonalize factor {n}: {exc}"
            unfold = np.prod(core.dims) // core.dims[n]
            if core.dims[n] > unfold:
                msg += (f" (rank {core.dims[n]} exceeds the product {unfold} of the other"
                        " ranks, so the updates cannot produce full column rank)")
            err = NumericFailure(msg, mode=n)
            err.model = model
            raise err from exc
        factors.append(q)
        core = core_mode_product(core, r, n)
    return Model(core, factors)


def run(tensor, config, init=None):
    """Factorize ``tensor``; returns the orthogonalized model and its stats.

    The loop stops when the relative change of the reconstruction error drops
    below ``config.tol``, after ``config.max_iters`` iterations, or when one
    iteration exceeds ``config.max_seconds_per_iter``.  Errors raised inside
    the loop carry the stats gathered so far as ``exc.stats``.
    """
    config.validate(tensor.order)
    if init is None:
        model = init_model(tensor.dims, config.ranks, config.seed)
    else:
        model = init.copy()
        if model.ranks != config.ranks:
            raise InvalidArgumentError(f"initial model ranks {model.ranks} != {config.ranks}")
    model.check(tensor)
    threads = config.threads
    stats = IterationStats()
    try:
        slices = build_mode_slices(tensor)
        prev = reconstruction_error(tensor, model, threads)
        stats.initial_error = prev
        stats.initial_loss = prev**2 + config.lam * regularizer(model)
        cache = None
        if config.variant == "cache":
            cache = precompute_cache(tensor, model, config.max_cache_bytes, threads)
        for it in range(1, config.max_iters + 1):
            start = time.perf_counter()
            per_mode = []
            for n in range(tensor.order):
                t0 = time.perf_counter()
                update_factor_matrix(tensor, model, n, config, cache, slices)
                per_mode.append(time.perf_counter() - t0)
            err = reconstruction_error(tensor, model, threads)
            if config.variant == "approx":
                stats.errors_before_truncation.append(err)
                skipped = model.core.nnz < 2
                if not skipped:
                    model = truncate_core(tensor, model, config.truncation_rate, threads)
                    err = reconstruction_error(tensor, model, threads)
                stats.truncation_skipped.append(skipped)
            elapsed = time.perf_counter() - start
            stats.errors.append(err)
            stats.losses.append(err**2 + config.lam * regularizer(model))
            stats.seconds.append(elapsed)
            stats.core_nnz.append(model.core.nnz)
            stats.mode_seconds.append(per_mode)
            log.info("iteration %d: error %.6g (%.3fs, |G|=%d)", it, err, elapsed, model.core.nnz)
            if abs(err - prev) / max(prev, 1e-30) < config.tol:
                stats.converged = True
                stats.stop_reason = "converged"
                break
            if elapsed > config.max_seconds_per_iter:
                stats.stop_reason = "time-limit"
                break
            prev = err
        else:
            stats.stop_reason = "max-iters"
        return orthogonalize(model), stats
    except (NumericFailure, ResourceLimitError) as exc:
        exc.stats = stats
        if getattr(exc, "model", None) is None:
            exc.model = model
        raise
