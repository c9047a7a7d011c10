"""Brute-force reference computations for tests.

Nothing here imports the compiled kernels or the solver; everything works on
a densified core with plain loops or ``einsum`` so the checks stay
independent of the code they check.  Intended for tiny instances only.
"""

import itertools
import string

import numpy as np


def densify(core):
    """Dense ``J_1 x .. x J_N`` array from a coordinate-list core."""
    out = np.zeros(core.dims)
    for pos in range(len(core.values)):
        out[tuple(int(j) for j in core.indices[pos])] += core.values[pos]
    return out


def naive_entry(dense_core, factors, index):
    total = 0.0
    for js in itertools.product(*(range(d) for d in dense_core.shape)):
        term = dense_core[js]
        for n, j in enumerate(js):
            term *= factors[n][index[n], j]
        total += term
    return total


def naive_reconstruct(model, indices):
    """Loop-over-everything reconstruction at each row of ``indices``."""
    g = densify(model.core)
    return np.array([naive_entry(g, model.factors, idx) for idx in np.asarray(indices)])


def _einsum_reconstruct(dense_core, factors, indices):
    order = dense_core.ndim
    letters = string.ascii_lowercase[:order]
    spec = letters + "," + ",".join("z" + c for c in letters) + "->z"
    rows = [np.asarray(f)[indices[:, n]] for n, f in enumerate(factors)]
    return np.einsum(spec, dense_core, *rows, optimize=True)


def naive_loss(tensor, model, lam, factors=None):
    """Squared residual over observed entries plus ``lam * sum ||A_n||^2``."""
    factors = model.factors if factors is None else factors
    recon = _einsum_reconstruct(densify(model.core), factors, tensor.indices)
    data = float(np.sum((tensor.values - recon) ** 2))
    reg = sum(float(np.sum(np.asarray(f) ** 2)) for f in factors)
    return data + lam * reg


def numeric_gradient(tensor, model, lam, n, row, h=1e-6):
    """Central-difference gradient of :func:`naive_loss` w.r.t. factor row ``(n, row)``."""
    base = [np.array(f, dtype=float) for f in model.factors]
    grad = np.zeros(base[n].shape[1])
    for j in range(grad.size):
        plus = [f.copy() for f in base]
        minus = [f.copy() for f in base]
        plus[n][row, j] += h
        minus[n][row, j] -= h
        grad[j] = (naive_loss(tensor, model, lam, plus)
                   - naive_loss(tensor, model, lam, minus)) / (2 * h)
    return grad


def naive_delta(tensor, model, alpha, n):
    g = densify(model.core)
    index = tensor.indices[alpha]
    out = np.zeros(g.shape[n])
    for js in itertools.product(*(range(d) for d in g.shape)):
        term = g[js]
        for k, j in enumerate(js):
            if k != n:
                term *= model.factors[k][index[k], j]
        out[js[n]] += term
    return out


def naive_partial_error(tensor, model, beta):
    """Squared error with core entry ``beta`` minus squared error without it."""
    g = densify(model.core)
    without = g.copy()
    without[tuple(beta)] = 0.0
    with_beta = _einsum_reconstruct(g, model.factors, tensor.indices)
    no_beta = _einsum_reconstruct(without, model.factors, tensor.indices)
    return float(np.sum((tensor.values - with_beta) ** 2)
                 - np.sum((tensor.values - no_beta) ** 2))


def naive_mode_product(dense_core, M, n):
    """Dense ``core x_n M`` by explicit loops."""
    out = np.zeros(dense_core.shape)
    for js in itertools.product(*(range(d) for d in dense_core.shape)):
        for k in range(M.shape[0]):
            target = list(js)
            target[n] = k
            out[tuple(target)] += dense_core[js] * M[k, js[n]]
    return out


def gauss_solve(A, b):
    """Gaussian elimination with partial pivoting for ``A x = b``."""
    A = np.array(A, dtype=float)
    x = np.array(b, dtype=float)
    size = len(x)
    for col in range(size):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        A[[col, piv]] = A[[piv, col]]
        x[[col, piv]] = x[[piv, col]]
        for r in range(col + 1, size):
            f = A[r, col] / A[col, col]
            A[r, col:] -= f * A[col, col:]
            x[r] -= f * x[col]
    for r in range(size - 1, -1, -1):
        x[r] = (x[r] - A[r, r + 1:] @ x[r + 1:]) / A[r, r]
    return x


def ridge_reference(M, x, lam):
    """(M^T M + lam I)^{-1} M^T x; the zero vector for an empty design."""
    M = np.asarray(M, dtype=float)
    x = np.asarray(x, dtype=float)
    size = M.shape[1]
    if M.shape[0] == 0:
        return np.zeros(size)
    return gauss_solve(M.T @ M + lam * np.eye(size), M.T @ x)
