"""numba-compiled walk enumeration and grounding kernels.

All arrays are int64. Adjacency layout matches ``kg.Adjacency``: head-major
edges sorted by (head, relation, tail), so a node's out-edges are iterated
in (r, t) order and DFS emits walks in canonical (lexicographic,
prefix-first) sequence order without post-sorting.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _segment(indptr, rel, h, r):
    lo = indptr[h]
    hi = indptr[h + 1]
    a = lo + np.searchsorted(rel[lo:hi], r, side="left")
    b = lo + np.searchsorted(rel[lo:hi], r, side="right")
    return a, b


@njit(cache=True)
def _has_edge(indptr, key, n_entities, h, r, t):
    lo = indptr[h]
    hi = indptr[h + 1]
    k = r * n_entities + t
    pos = lo + np.searchsorted(key[lo:hi], k)
    return pos < hi and key[pos] == k


@njit(cache=True)
def _grow(arr, need):
    if need <= arr.size:
        return arr
    new_size = arr.size
    while new_size < need:
        new_size *= 2
    out = np.empty(new_size, np.int64)
    out[: arr.size] = arr
    return out


@njit(cache=True)
def enumerate_walks(indptr, rel, tail, src, dst, max_hops, ex_h, ex_r, ex_t, ex_ri):
    """All walks of length 1..max_hops from src to dst.

    Returns (data, offsets): walk i is data[offsets[i]:offsets[i+1]],
    interleaved as r1, e1, r2, e2, ... Edge (ex_h, ex_r, ex_t) and its
    mirror (ex_t, ex_ri, ex_h) are never taken as a step; ex_r < 0 disables
    the exclusion.
    """
    pos = np.empty(max_hops, np.int64)
    end = np.empty(max_hops, np.int64)
    cur = np.empty(max_hops + 1, np.int64)
    seq = np.empty(2 * max_hops, np.int64)
    out = np.empty(1024, np.int64)
    offs = np.empty(1024, np.int64)

    cur[0] = src
    pos[0] = indptr[src]
    end[0] = indptr[src + 1]
    depth = 0
    n_out = 0
    n_walks = 0
    offs[0] = 0

    while depth >= 0:
        if pos[depth] < end[depth]:
            i = pos[depth]
            pos[depth] += 1
            r = rel[i]
            e = tail[i]
            c = cur[depth]
            if ex_r >= 0:
                if (c == ex_h and r == ex_r and e == ex_t) or (
                    c == ex_t and r == ex_ri and e == ex_h
                ):
                    continue
            seq[2 * depth] = r
            seq[2 * depth + 1] = e
            nd = depth + 1
            if e == dst:
                out = _grow(out, n_out + 2 * nd)
                out[n_out : n_out + 2 * nd] = seq[: 2 * nd]
                n_out += 2 * nd
                n_walks += 1
                offs = _grow(offs, n_walks + 1)
                offs[n_walks] = n_out
            if nd < max_hops:
                cur[nd] = e
                pos[nd] = indptr[e]
                end[nd] = indptr[e + 1]
                depth = nd
        else:
            depth -= 1
    return out[:n_out], offs[: n_walks + 1]


@njit(cache=True)
def match_walks(indptr, rel, tail, src, body):
    """All groundings of the relation chain `body` starting at src.

    Returns a flat int64 array; grounding i occupies positions
    [i*n, (i+1)*n) and holds the entities after each step (the last one is
    the candidate tail). Lexicographic order on entity sequences.
    """
    n = body.size
    pos = np.empty(n, np.int64)
    end = np.empty(n, np.int64)
    seq = np.empty(n, np.int64)
    out = np.empty(1024, np.int64)

    a, b = _segment(indptr, rel, src, body[0])
    pos[0] = a
    end[0] = b
    depth = 0
    n_out = 0

    while depth >= 0:
        if pos[depth] < end[depth]:
            i = pos[depth]
            pos[depth] += 1
            e = tail[i]
            seq[depth] = e
            nd = depth + 1
            if nd == n:
                out = _grow(out, n_out + n)
                out[n_out : n_out + n] = seq
                n_out += n
            else:
                a, b = _segment(indptr, rel, e, body[nd])
                pos[nd] = a
                end[nd] = b
                depth = nd
        else:
            depth -= 1
    return out[:n_out]


@njit(cache=True)
def ground_counts(indptr, rel, tail, key, n_entities, body, head_rel, starts):
    """Distinct-(X, Y) grounding counts for a relation chain.

    For each start X the chain is expanded breadth-first with per-level
    dedup; body_count accumulates |reach(X)| and support the number of
    reached Y with (X, head_rel, Y) present in the edge set.
    """
    stamp = np.full(n_entities, -1, np.int64)
    cur = np.empty(n_entities, np.int64)
    nxt = np.empty(n_entities, np.int64)
    body_count = 0
    support = 0
    marker = 0

    for si in range(starts.size):
        x = starts[si]
        a, b = _segment(indptr, rel, x, body[0])
        n_cur = b - a
        cur[:n_cur] = tail[a:b]
        for bi in range(1, body.size):
            step = body[bi]
            marker += 1
            n_nxt = 0
            for j in range(n_cur):
                a, b = _segment(indptr, rel, cur[j], step)
                for k in range(a, b):
                    y = tail[k]
                    if stamp[y] != marker:
                        stamp[y] = marker
                        nxt[n_nxt] = y
                        n_nxt += 1
            tmp = cur
            cur = nxt
            nxt = tmp
            n_cur = n_nxt
            if n_cur == 0:
                break
        body_count += n_cur
        for j in range(n_cur):
            if _has_edge(indptr, key, n_entities, x, head_rel, cur[j]):
                support += 1
    return body_count, support
