"""numba kernels for the O(N^2) distance work and the swap search."""

import numpy as np
from numba import njit


@njit(cache=True)
def _lev(a, a0, a1, b, b0, b1, row):
    la = a1 - a0
    lb = b1 - b0
    for j in range(lb + 1):
        row[j] = j
    for i in range(1, la + 1):
        prev = row[0]
        row[0] = i
        ai = a[a0 + i - 1]
        for j in range(1, lb + 1):
            cur = row[j]
            cost = 0 if ai == b[b0 + j - 1] else 1
            best = prev + cost
            if row[j] + 1 < best:
                best = row[j] + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best
            prev = cur
    return row[lb]


@njit(cache=True)
def levenshtein_matrix(tokens, offsets):
    """Pairwise edit distances of words stored CSR-style (``tokens[offsets[i]:offsets[i+1]]``)."""
    n = offsets.shape[0] - 1
    longest = 0
    for i in range(n):
        if offsets[i + 1] - offsets[i] > longest:
            longest = offsets[i + 1] - offsets[i]
    out = np.zeros((n, n), dtype=np.int16)
    row = np.empty(longest + 1, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            d = _lev(tokens, offsets[i], offsets[i + 1], tokens, offsets[j], offsets[j + 1], row)
            out[i, j] = d
            out[j, i] = d
    return out


@njit(cache=True)
def upper_histogram(d, size):
    n = d.shape[0]
    h = np.zeros(size, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            h[d[i, j]] += 1
    return h


@njit(cache=True)
def permuted_cross_sum(ds, df, a_s, a_f, perm):
    """sum_{i<j} a_s[ds[i,j]] * a_f[df[perm[i], perm[j]]] in float64."""
    n = ds.shape[0]
    total = 0.0
    for i in range(n):
        pi = perm[i]
        for j in range(i + 1, n):
            total += float(a_s[ds[i, j]]) * float(a_f[df[pi, perm[j]]])
    return total


@njit(cache=True)
def swap_delta(ds, df, a_s, a_f, perm, i, j):
    """Exact change of the cross sum when perm[i] and perm[j] are exchanged."""
    n = ds.shape[0]
    pi = perm[i]
    pj = perm[j]
    acc = a_s[0] * 0
    for k in range(n):
        if k == i or k == j:
            continue
        pk = perm[k]
        acc += (a_s[ds[i, k]] - a_s[ds[j, k]]) * (a_f[df[pj, pk]] - a_f[df[pi, pk]])
    return acc


@njit(cache=True)
def climb_chunk(ds, df, a_s, a_f, perm, prop_i, prop_j, stall, max_iters, it0, acc_iter, acc_delta):
    """Run proposals until the chunk ends or ``max_iters`` consecutive rejections.

    Accepted moves are written to ``acc_iter``/``acc_delta``. Returns
    (proposals used, accepted count, stall counter).
    """
    n_acc = 0
    used = 0
    for t in range(prop_i.shape[0]):
        if stall >= max_iters:
            break
        used += 1
        i = prop_i[t]
        j = prop_j[t]
        d = swap_delta(ds, df, a_s, a_f, perm, i, j)
        if d > 0:
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
            acc_iter[n_acc] = it0 + t
            acc_delta[n_acc] = float(d)
            n_acc += 1
            stall = 0
        else:
            stall += 1
    return used, n_acc, stall
