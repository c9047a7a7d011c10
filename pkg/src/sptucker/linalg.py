"""Small dense kernels: regularized row solve, thin QR, core mode product."""

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError, NumericFailure
from .tensor import CoreTensor

#: Core entries at or below this magnitude are dropped after a mode product.
CORE_DROP_THRESHOLD = 1e-15


def solve_row_system(B, c, lam, row=None):
    """Return ``x`` with ``x @ (B + lam*I) = c`` via a Cholesky factorization.

    ``row`` is only used to label the error when the factorization fails.
    """
    B = np.array(B, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64).ravel()
    size = c.shape[0]
    if B.shape != (size, size):
        raise InvalidArgumentError(f"B has shape {B.shape}, expected ({size}, {size})")
    if lam < 0:
        raise InvalidArgumentError(f"lambda must be >= 0, got {lam}")
    B[np.diag_indices(size)] += lam
    x = np.empty(size)
    # B + lam*I is symmetric, so solving from the left or right is the same
    if not _kernels.chol_solve(B, c, x):
        where = "" if row is None else f" while updating row {row}"
        raise NumericFailure(f"Cholesky factorization failed{where}", row=row)
    return x


def thin_qr(A):
    """Householder thin QR with a non-negative diagonal in ``R``.

    Returns ``Q`` (I x J, orthonormal columns) and upper-triangular ``R``
    (J x J) with ``A = Q @ R``.  Raises ``NumericFailure`` when a diagonal
    entry of ``R`` is below ``1e-12 * ||A||_F``.
    """
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidArgumentError("thin_qr expects a matrix")
    n_rows, n_cols = A.shape
    if n_rows < n_cols:
        raise InvalidArgumentError(f"thin QR needs rows >= cols, got {A.shape}")
    scale = np.linalg.norm(A)
    R = A
    reflectors = []
    for j in range(n_cols):
        x = R[j:, j]
        norm_x = np.linalg.norm(x)
        alpha = -norm_x if x[0] >= 0 else norm_x
        v = x.copy()
        v[0] -= alpha
        norm_v = np.linalg.norm(v)
        if norm_v == 0.0:
            reflectors.append(None)
            continue
        v /= norm_v
        R[j:, j:] -= 2.0 * np.outer(v, v @ R[j:, j:])
        reflectors.append(v)
    R = np.triu(R[:n_cols])
    diag = np.abs(np.diag(R))
    bad = np.flatnonzero(diag <= 1e-12 * scale) if scale > 0 else np.arange(n_cols)
    if bad.size:
        raise NumericFailure(f"matrix is rank deficient at column {int(bad[0])}")
    Q = np.eye(n_rows, n_cols)
    for j in range(n_cols - 1, -1, -1):
        v = reflectors[j]
        if v is not None:
            Q[j:, :] -= 2.0 * np.outer(v, v @ Q[j:, :])
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def core_mode_product(core, M, n):
    """``core x_n M``: contracts mode ``n`` of the core with the columns of ``M``.

    Output entry ``(.., k, ..)`` is ``sum_j core[.., j, ..] * M[k, j]``.
    ``M`` must be square so the core keeps its dims.
    """
    M = np.asarray(M, dtype=np.float64)
    if not 0 <= n < core.order:
        raise InvalidArgumentError(f"mode {n} out of range for an order-{core.order} core")
    if M.ndim != 2 or M.shape != (core.dims[n], core.dims[n]):
        raise InvalidArgumentError(
            f"mode-{n} product needs a {core.dims[n]}x{core.dims[n]} matrix, got {M.shape}"
        )
    dense = np.moveaxis(core.dense(), n, -1) @ M.T
    return CoreTensor.from_dense(np.moveaxis(dense, -1, n), drop_below=CORE_DROP_THRESHOLD)
