"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's data structures: they
work on plain dicts and sets built straight from string triples, so a bug
in the indexed implementations cannot hide in its own mirror.
"""

from __future__ import annotations

import random
from collections import defaultdict
from io import StringIO

import pytest

from kginterp.kg import KnowledgeGraph, augment_inverses, load_kg_splits

INV = "^-1"

StrTriple = tuple[str, str, str]


def make_kg(
    train: list[StrTriple],
    test: list[StrTriple] = (),
    valid: list[StrTriple] = (),
) -> KnowledgeGraph:
    """Augmented KnowledgeGraph from string triples."""

    def tsv(rows):
        return StringIO("".join(f"{h}\t{r}\t{t}\n" for h, r, t in rows))

    return augment_inverses(load_kg_splits(tsv(train), tsv(valid), tsv(test)))


def random_triples(
    rng: random.Random,
    max_entities: int = 50,
    max_relations: int = 8,
    max_triples: int = 300,
) -> list[StrTriple]:
    n_e = rng.randint(2, max_entities)
    n_r = rng.randint(1, max_relations)
    n_t = rng.randint(1, max_triples)
    seen = set()
    for _ in range(n_t):
        seen.add((
            f"e{rng.randrange(n_e)}",
            f"r{rng.randrange(n_r)}",
            f"e{rng.randrange(n_e)}",
        ))
    return sorted(seen)


# ---- walk-enumeration oracle ------------------------------------------


def augmented_adj(triples: list[StrTriple]) -> dict[str, list[tuple[str, str]]]:
    adj: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for h, r, t in triples:
        adj[h].append((r, t))
        adj[t].append((r + INV, h))
    return adj


def oracle_walks(
    triples: list[StrTriple],
    head: str,
    tail: str,
    max_hops: int,
    exclude: StrTriple | None = None,
) -> set[tuple[tuple[str, str], ...]]:
    """Exhaustive recursive DFS over a dict adjacency; returns the set of
    walks as ((relation, entity), ...) step tuples."""
    adj = augmented_adj(triples)
    blocked = set()
    if exclude is not None:
        h, r, t = exclude
        blocked = {(h, r, t), (t, r + INV, h)}
    walks: set[tuple[tuple[str, str], ...]] = set()

    def dfs(node: str, acc: list[tuple[str, str]]) -> None:
        if acc and node == tail:
            walks.add(tuple(acc))
        if len(acc) == max_hops:
            return
        for rel, nxt in adj[node]:
            if (node, rel, nxt) in blocked:
                continue
            acc.append((rel, nxt))
            dfs(nxt, acc)
            acc.pop()

    dfs(head, [])
    return walks


# ---- grounding-count oracle -------------------------------------------


def oracle_ground_counts(
    triples: list[StrTriple], body: list[str], head_rel: str
) -> tuple[int, int]:
    """Brute-force distinct (X, Y) body groundings and closed-world support."""
    adj = augmented_adj(triples)
    edges = set()
    for h, r, t in triples:
        edges.add((h, r, t))
        edges.add((t, r + INV, h))
    starts = {h for (h, out) in adj.items() for (r, _) in out if r == body[0]}
    body_pairs = set()
    for x in starts:
        frontier = {x}
        for rel in body:
            frontier = {t for n in frontier for (r, t) in adj[n] if r == rel}
        for y in frontier:
            body_pairs.add((x, y))
    support = sum(1 for x, y in body_pairs if (x, head_rel, y) in edges)
    return len(body_pairs), support


# ---- calibration oracle -----------------------------------------------


def oracle_calibrate(
    confidences: list[float], classes: list[int]
) -> tuple[float, float, float]:
    """O(n^2) sweep over every candidate (h1, h2) pair; returns the
    lexicographically smallest maximizer and its accuracy."""
    cand = sorted(set([0.0] + confidences + [max(confidences) + 1.0]))
    n = len(confidences)
    best: tuple[int, float, float] | None = None
    for h1 in cand:
        for h2 in cand:
            if h1 > h2:
                continue
            correct = sum(
                cls == (2 if c >= h2 else 1 if c >= h1 else 0)
                for c, cls in zip(confidences, classes)
            )
            if best is None or correct > best[0]:
                best = (correct, h1, h2)
    assert best is not None
    return best[1], best[2], best[0] / n


@pytest.fixture
def chain_kg() -> KnowledgeGraph:
    """Two-step chain a -r1-> b -r2-> c with test triple (a, r3, c)."""
    return make_kg(
        train=[("a", "r1", "b"), ("b", "r2", "c")],
        test=[("a", "r3", "c")],
    )
