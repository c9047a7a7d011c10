"""Compiled inner loops.

Every kernel works on a half-open range of rows/entries/core entries and
releases the GIL, so :mod:`sptucker.parallel` can hand ranges to threads.
Row updates run as worker loops that pull row chunks from a shared queue
with an atomic counter, so a worker makes one call per mode.
Factor matrices are addressed through the flat model buffer:
``A_k[i, j] == fbuf[foff[k] + i * fcols[k] + j]``.
"""

import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic

_JIT = dict(nogil=True, cache=True, fastmath=False)


@intrinsic
def _fetch_add(typingctx, arr, pos, inc):
    """Atomically add ``inc`` to ``arr[pos]`` (int64) and return the old value."""
    if not (isinstance(arr, types.Array) and arr.dtype == types.int64):
        return None
    sig = types.int64(arr, types.intp, types.int64)

    def codegen(context, builder, signature, args):
        arr_t = signature.args[0]
        ary = context.make_array(arr_t)(context, builder, args[0])
        ptr = cgutils.get_item_pointer(context, builder, arr_t, ary, [args[1]])
        return builder.atomic_rmw("add", ptr, args[2], "seq_cst")

    return sig, codegen


@njit(**_JIT)
def claim_chunk(queue):
    """Next chunk number from a shared work queue ``[next_chunk, n_chunks, stop]``."""
    if queue[2] != 0:
        return queue[1]
    return _fetch_add(queue, 0, 1)


@njit(**_JIT)
def chol_solve(m, rhs, out):
    """Solve ``m @ out = rhs`` for symmetric positive-definite ``m``.

    ``m`` is overwritten with its lower Cholesky factor.  Returns False when a
    pivot is non-positive or non-finite.
    """
    size = m.shape[0]
    for j in range(size):
        s = m[j, j]
        for k in range(j):
            s -= m[j, k] * m[j, k]
        if not (s > 0.0) or not np.isfinite(s):
            return False
        d = np.sqrt(s)
        m[j, j] = d
        for i in range(j + 1, size):
            t = m[i, j]
            for k in range(j):
                t -= m[i, k] * m[j, k]
            m[i, j] = t / d
    for i in range(size):
        t = rhs[i]
        for k in range(i):
            t -= m[i, k] * out[k]
        out[i] = t / m[i, i]
    for i in range(size - 1, -1, -1):
        t = out[i]
        for k in range(i + 1, size):
            t -= m[k, i] * out[k]
        out[i] = t / m[i, i]
    for i in range(size):
        if not np.isfinite(out[i]):
            return False
    return True


@njit(**_JIT)
def delta_direct(idx, a, n, fbuf, foff, fcols, core_idx, core_val, out):
    """out[j] = sum of G[b] * prod_{k != n} A_k[i_k, b_k] over core entries with b_n = j."""
    out[:] = 0.0
    order = idx.shape[1]
    for b in range(core_val.shape[0]):
        v = core_val[b]
        for k in range(order):
            if k != n:
                v *= fbuf[foff[k] + idx[a, k] * fcols[k] + core_idx[b, k]]
        out[core_idx[b, n]] += v


@njit(**_JIT)
def full_product(idx, a, b, fbuf, foff, fcols, core_idx, core_val):
    v = core_val[b]
    for k in range(idx.shape[1]):
        v *= fbuf[foff[k] + idx[a, k] * fcols[k] + core_idx[b, k]]
    return v


@njit(**_JIT)
def delta_cached(pres, idx, a, n, fbuf, foff, fcols, core_idx, core_val, eps, out):
    """Same value as :func:`delta_direct`, read from the product cache.

    Divides the cached full product by the mode-n factor value; when that
    value is within ``eps`` of zero the term is recomputed directly.
    """
    out[:] = 0.0
    order = idx.shape[1]
    base = foff[n] + idx[a, n] * fcols[n]
    for b in range(core_val.shape[0]):
        jn = core_idx[b, n]
        an = fbuf[base + jn]
        if abs(an) > eps:
            out[jn] += pres[a, b] / an
        else:
            v = core_val[b]
            for k in range(order):
                if k != n:
                    v *= fbuf[foff[k] + idx[a, k] * fcols[k] + core_idx[b, k]]
            out[jn] += v


@njit(**_JIT)
def _accumulate(b_mat, c_vec, delta, x):
    size = delta.shape[0]
    for j1 in range(size):
        d1 = delta[j1]
        c_vec[j1] += x * d1
        for j2 in range(size):
            b_mat[j1, j2] += d1 * delta[j2]


@njit(**_JIT)
def _solve_into_row(b_mat, c_vec, lam, fbuf, base, row):
    size = c_vec.shape[0]
    for j in range(size):
        b_mat[j, j] += lam
    ok = chol_solve(b_mat, c_vec, row)
    if not ok:
        return False
    for j in range(size):
        fbuf[base + j] = row[j]
    return True


@njit(**_JIT)
def update_rows_direct(r0, r1, n, perm, ptr, idx, vals, fbuf, foff, fcols,
                       core_idx, core_val, lam, b_mat, c_vec, delta, row):
    """Row-wise least-squares update of rows ``r0..r1-1`` of factor ``n``.

    Returns the first row whose system could not be factored, or -1.
    """
    size = fcols[n]
    for r in range(r0, r1):
        base = foff[n] + r * size
        s = ptr[r]
        e = ptr[r + 1]
        if s == e:
            for j in range(size):
                fbuf[base + j] = 0.0
            continue
        b_mat[:, :] = 0.0
        c_vec[:] = 0.0
        for p in range(s, e):
            a = perm[p]
            delta_direct(idx, a, n, fbuf, foff, fcols, core_idx, core_val, delta)
            _accumulate(b_mat, c_vec, delta, vals[a])
        if not _solve_into_row(b_mat, c_vec, lam, fbuf, base, row):
            return r
    return -1


@njit(**_JIT)
def update_rows_cached(r0, r1, n, perm, ptr, idx, vals, fbuf, foff, fcols,
                       core_idx, core_val, lam, pres, eps, b_mat, c_vec, delta, row):
    size = fcols[n]
    for r in range(r0, r1):
        base = foff[n] + r * size
        s = ptr[r]
        e = ptr[r + 1]
        if s == e:
            for j in range(size):
                fbuf[base + j] = 0.0
            continue
        b_mat[:, :] = 0.0
        c_vec[:] = 0.0
        for p in range(s, e):
            a = perm[p]
            delta_cached(pres, idx, a, n, fbuf, foff, fcols, core_idx, core_val, eps, delta)
            _accumulate(b_mat, c_vec, delta, vals[a])
        if not _solve_into_row(b_mat, c_vec, lam, fbuf, base, row):
            return r
    return -1


@njit(**_JIT)
def fill_cache(a0, a1, idx, fbuf, foff, fcols, core_idx, core_val, pres):
    for a in range(a0, a1):
        for b in range(core_val.shape[0]):
            pres[a, b] = full_product(idx, a, b, fbuf, foff, fcols, core_idx, core_val)


@njit(**_JIT)
def refresh_cache(a0, a1, n, idx, old, fbuf, foff, fcols, core_idx, core_val, pres, eps):
    """Rescale cached products after factor ``n`` changed from ``old``."""
    size = fcols[n]
    for a in range(a0, a1):
        i = idx[a, n]
        base = foff[n] + i * size
        for b in range(core_val.shape[0]):
            jn = core_idx[b, n]
            prev = old[i, jn]
            if abs(prev) > eps:
                pres[a, b] = pres[a, b] / prev * fbuf[base + jn]
            else:
                pres[a, b] = full_product(idx, a, b, fbuf, foff, fcols, core_idx, core_val)


@njit(**_JIT)
def reconstruct_range(a0, a1, idx, fbuf, foff, fcols, core_idx, core_val, out):
    for a in range(a0, a1):
        s = 0.0
        for b in range(core_val.shape[0]):
            s += full_product(idx, a, b, fbuf, foff, fcols, core_idx, core_val)
        out[a] = s


@njit(**_JIT)
def squared_residual_range(a0, a1, idx, vals, fbuf, foff, fcols, core_idx, core_val):
    total = 0.0
    for a in range(a0, a1):
        s = 0.0
        for b in range(core_val.shape[0]):
            s += full_product(idx, a, b, fbuf, foff, fcols, core_idx, core_val)
        r = vals[a] - s
        total += r * r
    return total


@njit(**_JIT)
def partial_error_range(b0, b1, idx, vals, recon, fbuf, foff, fcols, core_idx, core_val, out):
    """out[b] = sum_a t_ab * (2 * (recon_a - x_a) - t_ab), t_ab the core entry's term."""
    for b in range(b0, b1):
        s = 0.0
        for a in range(vals.shape[0]):
            t = full_product(idx, a, b, fbuf, foff, fcols, core_idx, core_val)
            s += t * (2.0 * (recon[a] - vals[a]) - t)
        out[b] = s


@njit(**_JIT)
def update_rows_direct_queue(queue, chunk, n_rows, n, perm, ptr, idx, vals, fbuf, foff,
                             fcols, core_idx, core_val, lam, b_mat, c_vec, delta, row):
    """Worker loop: claim row chunks until the queue is drained."""
    n_chunks = queue[1]
    while True:
        k = claim_chunk(queue)
        if k >= n_chunks:
            return -1
        r0 = k * chunk
        r1 = min(n_rows, r0 + chunk)
        bad = update_rows_direct(r0, r1, n, perm, ptr, idx, vals, fbuf, foff, fcols,
                                 core_idx, core_val, lam, b_mat, c_vec, delta, row)
        if bad >= 0:
            queue[2] = 1
            return bad


@njit(**_JIT)
def update_rows_cached_queue(queue, chunk, n_rows, n, perm, ptr, idx, vals, fbuf, foff,
                             fcols, core_idx, core_val, lam, pres, eps, b_mat, c_vec,
                             delta, row):
    n_chunks = queue[1]
    while True:
        k = claim_chunk(queue)
        if k >= n_chunks:
            return -1
        r0 = k * chunk
        r1 = min(n_rows, r0 + chunk)
        bad = update_rows_cached(r0, r1, n, perm, ptr, idx, vals, fbuf, foff, fcols,
                                 core_idx, core_val, lam, pres, eps, b_mat, c_vec, delta, row)
        if bad >= 0:
            queue[2] = 1
            return bad
