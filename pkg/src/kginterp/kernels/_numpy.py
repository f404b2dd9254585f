"""Pure numpy/scipy fallback kernels, API-compatible with the numba set.

Walk enumeration is level-synchronous frontier expansion re-sorted into
canonical order afterwards; grounding counts use boolean sparse-matrix
chains. Slower than the compiled kernels but dependency-light and exact.
"""

from __future__ import annotations

from weakref import WeakKeyDictionary

import numpy as np
from scipy import sparse

_CSR_CACHE: "WeakKeyDictionary" = WeakKeyDictionary()


def _expand(indptr, frontier_last):
    """Vectorized gather of all out-edge indices for each frontier row."""
    lo = indptr[frontier_last]
    hi = indptr[frontier_last + 1]
    counts = hi - lo
    total = int(counts.sum())
    seg_starts = np.cumsum(counts) - counts
    within = np.arange(total, dtype=np.int64) - np.repeat(seg_starts, counts)
    idx = np.repeat(lo, counts) + within
    rows = np.repeat(np.arange(frontier_last.size, dtype=np.int64), counts)
    return rows, idx


def enumerate_walks(indptr, rel, tail, src, dst, max_hops, ex_h, ex_r, ex_t, ex_ri):
    per_level: list[np.ndarray] = []
    frontier = np.empty((1, 0), dtype=np.int64)
    last = np.array([src], dtype=np.int64)
    for level in range(1, max_hops + 1):
        rows, idx = _expand(indptr, last)
        new_r = rel[idx]
        new_e = tail[idx]
        cur = last[rows]
        if ex_r >= 0:
            drop = ((cur == ex_h) & (new_r == ex_r) & (new_e == ex_t)) | (
                (cur == ex_t) & (new_r == ex_ri) & (new_e == ex_h)
            )
            keep = ~drop
            rows, new_r, new_e = rows[keep], new_r[keep], new_e[keep]
        frontier = np.concatenate(
            [frontier[rows], new_r[:, None], new_e[:, None]], axis=1
        )
        last = new_e
        per_level.append(frontier[last == dst])
        if last.size == 0:
            break

    n_walks = sum(len(a) for a in per_level)
    width = 2 * max_hops
    padded = np.full((n_walks, width), -1, dtype=np.int64)
    lengths = np.empty(n_walks, dtype=np.int64)
    at = 0
    for a in per_level:
        padded[at : at + len(a), : a.shape[1]] = a
        lengths[at : at + len(a)] = a.shape[1]
        at += len(a)
    # canonical order: lexicographic on interleaved sequences, prefixes first
    order = np.lexsort(tuple(padded[:, c] for c in range(width - 1, -1, -1)))
    lengths = lengths[order]
    offsets = np.zeros(n_walks + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    data = np.empty(int(offsets[-1]), dtype=np.int64)
    for i, j in enumerate(order):
        data[offsets[i] : offsets[i + 1]] = padded[j, : lengths[i]]
    return data, offsets


def match_walks(rel_indptr, rel_head, rel_tail, src, body):
    seqs = np.empty((1, 0), dtype=np.int64)
    frontier = np.array([src], dtype=np.int64)
    for step in body:
        lo = rel_indptr[step]
        hi = rel_indptr[step + 1]
        heads = rel_head[lo:hi]
        a = lo + np.searchsorted(heads, frontier, side="left")
        b = lo + np.searchsorted(heads, frontier, side="right")
        counts = b - a
        total = int(counts.sum())
        seg_starts = np.cumsum(counts) - counts
        within = np.arange(total, dtype=np.int64) - np.repeat(seg_starts, counts)
        idx = np.repeat(a, counts) + within
        rows = np.repeat(np.arange(frontier.size, dtype=np.int64), counts)
        new_e = rel_tail[idx]
        seqs = np.concatenate([seqs[rows], new_e[:, None]], axis=1)
        frontier = new_e
        if frontier.size == 0:
            return np.empty(0, dtype=np.int64)
    return seqs.ravel()


def _rel_matrix(adj, r) -> sparse.csr_matrix:
    cache = _CSR_CACHE.get(adj)
    if cache is None:
        cache = {}
        _CSR_CACHE[adj] = cache
    m = cache.get(r)
    if m is None:
        lo, hi = adj.rel_indptr[r], adj.rel_indptr[r + 1]
        n = adj.n_entities
        data = np.ones(hi - lo, dtype=np.int64)
        m = sparse.csr_matrix(
            (data, (adj.rel_head[lo:hi], adj.rel_tail[lo:hi])), shape=(n, n)
        )
        cache[r] = m
    return m


def ground_counts(adj, body, head_rel, starts):
    chain = _rel_matrix(adj, body[0])[starts, :]
    for step in body[1:]:
        chain = chain @ _rel_matrix(adj, step)
        chain.data.fill(1)  # boolean semiring: keep distinct-pair counting exact
    body_count = int(chain.nnz)
    head = _rel_matrix(adj, head_rel)[starts, :]
    support = int(chain.multiply(head).nnz)
    return body_count, support
