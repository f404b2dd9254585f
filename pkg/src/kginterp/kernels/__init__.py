"""Hot-loop kernels with a numba backend and a pure numpy/scipy fallback.

The backend is picked per call: an explicit ``backend=`` argument wins,
then the ``KGINTERP_BACKEND`` environment variable ("numba" or "numpy"),
then numba when importable. ``python benchmarks/bench_kernels.py`` compares
the two.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from ..kg import Adjacency
from . import _numpy

logger = logging.getLogger(__name__)

ENV_VAR = "KGINTERP_BACKEND"

_numba_mod = None
_numba_failed = False


def _numba_kernels():
    global _numba_mod, _numba_failed
    if _numba_mod is None and not _numba_failed:
        try:
            from . import _numba as mod
            _numba_mod = mod
        except ImportError:
            _numba_failed = True
            logger.warning("numba unavailable; falling back to numpy kernels")
    return _numba_mod


def active_backend(override: str | None = None) -> str:
    """Resolve the kernel backend name ("numba" or "numpy")."""
    name = override or os.environ.get(ENV_VAR, "").strip().lower()
    if name not in ("", "numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r} (expected numba or numpy)")
    if name == "numpy":
        return "numpy"
    if _numba_kernels() is None:
        return "numpy"
    return "numba"


_NO_EXCLUDE = (-1, -1, -1, -1)


def enumerate_walks(
    adj: Adjacency,
    src: int,
    dst: int,
    max_hops: int,
    exclude: tuple[int, int, int, int] | None = None,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """All walks of length 1..max_hops from src to dst, canonical order.

    Returns (data, offsets): walk i is data[offsets[i]:offsets[i+1]],
    interleaved r1, e1, r2, e2, ... ``exclude`` is (h, r, t, r_inv): the
    edge (h, r, t) and its mirror (t, r_inv, h) are never used as a step.
    """
    ex = exclude if exclude is not None else _NO_EXCLUDE
    if active_backend(backend) == "numba":
        k = _numba_kernels()
        return k.enumerate_walks(
            adj.indptr, adj.rel, adj.tail, src, dst, max_hops, ex[0], ex[1], ex[2], ex[3]
        )
    return _numpy.enumerate_walks(
        adj.indptr, adj.rel, adj.tail, src, dst, max_hops, ex[0], ex[1], ex[2], ex[3]
    )


def match_walks(
    adj: Adjacency, src: int, body, backend: str | None = None
) -> np.ndarray:
    """Groundings of the relation chain `body` from src, as an (k, len(body))
    entity matrix in lexicographic order; the last column is the tail."""
    body = np.asarray(body, dtype=np.int64)
    if active_backend(backend) == "numba":
        k = _numba_kernels()
        flat = k.match_walks(adj.indptr, adj.rel, adj.tail, src, body)
    else:
        flat = _numpy.match_walks(adj.rel_indptr, adj.rel_head, adj.rel_tail, src, body)
    return flat.reshape(-1, body.size)


def distinct_heads(adj: Adjacency, rel: int) -> np.ndarray:
    """Distinct entities with at least one out-edge labelled rel."""
    lo, hi = adj.rel_indptr[rel], adj.rel_indptr[rel + 1]
    heads = adj.rel_head[lo:hi]
    if heads.size == 0:
        return heads
    keep = np.empty(heads.size, dtype=bool)
    keep[0] = True
    np.not_equal(heads[1:], heads[:-1], out=keep[1:])
    return heads[keep]


def ground_counts(
    adj: Adjacency,
    body,
    head_rel: int,
    starts: np.ndarray | None = None,
    backend: str | None = None,
) -> tuple[int, int]:
    """(body_count, support) over distinct (X, Y) grounding pairs of `body`,
    X restricted to `starts` (default: every entity with a body[0] edge)."""
    body = np.asarray(body, dtype=np.int64)
    if starts is None:
        starts = distinct_heads(adj, body[0])
    starts = np.asarray(starts, dtype=np.int64)
    if active_backend(backend) == "numba":
        k = _numba_kernels()
        bc, sup = k.ground_counts(
            adj.indptr, adj.rel, adj.tail, adj.key, adj.n_entities, body, head_rel, starts
        )
        return int(bc), int(sup)
    return _numpy.ground_counts(adj, body, head_rel, starts)
