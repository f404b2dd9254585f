"""Walk enumeration between entity pairs and claimed-path validation.

Paths are grounded walks on the augmented training graph: a head entity
followed by (relation, entity) steps. Enumeration is bounded (default three
hops) and deduplicated by exact step sequence; revisiting entities and
backtracking through inverse edges are allowed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

from .errors import ParseError, UnknownNameError
from .kg import KnowledgeGraph
from . import kernels

logger = logging.getLogger(__name__)

DEFAULT_MAX_HOPS = 3

Triple = tuple[int, int, int]


@dataclass(frozen=True)
class Path:
    """A grounded walk: head entity plus (relation, entity) steps."""

    head: int
    steps: tuple[tuple[int, int], ...]

    @property
    def tail(self) -> int:
        return self.steps[-1][1] if self.steps else self.head

    @property
    def relations(self) -> tuple[int, ...]:
        return tuple(r for r, _ in self.steps)

    @property
    def entities(self) -> tuple[int, ...]:
        """Entities after each step (the last one is the tail)."""
        return tuple(e for _, e in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def sort_key(self) -> tuple[int, ...]:
        return tuple(x for step in self.steps for x in step)


@dataclass
class PathSet:
    query: Triple
    paths: list[Path] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self) -> Iterator[Path]:
        return iter(self.paths)


def _check_entity(kg: KnowledgeGraph, idx: int) -> None:
    if not 0 <= idx < kg.n_entities:
        raise UnknownNameError(f"entity id {idx} out of range")


def enumerate_paths(
    kg: KnowledgeGraph,
    query: Triple,
    max_hops: int = DEFAULT_MAX_HOPS,
    exclude_query_edge: bool = True,
    backend: str | None = None,
) -> PathSet:
    """All walks of length 1..max_hops from query head to query tail.

    With exclude_query_edge the edges (h, r, t) and (t, r^-1, h) themselves
    are never taken as a step, so the harness behaves when the query triple
    is part of the training graph.
    """
    h, r, t = query
    _check_entity(kg, h)
    _check_entity(kg, t)
    exclude = None
    if exclude_query_edge:
        exclude = (h, r, t, kg.inverse_of(r))
    data, offsets = kernels.enumerate_walks(
        kg.adjacency, h, t, max_hops, exclude=exclude, backend=backend
    )
    paths = []
    for i in range(len(offsets) - 1):
        seq = data[offsets[i] : offsets[i + 1]]
        steps = tuple((int(seq[j]), int(seq[j + 1])) for j in range(0, len(seq), 2))
        paths.append(Path(head=h, steps=steps))
    return PathSet(query=query, paths=paths)


@dataclass
class CollectedPaths:
    """Batch enumeration result: per-query path sets plus failures."""

    by_query: dict[Triple, PathSet] = field(default_factory=dict)
    failures: list[tuple[Triple, str]] = field(default_factory=list)

    @property
    def total_paths(self) -> int:
        return sum(len(ps) for ps in self.by_query.values())


def collect_all_paths(
    kg: KnowledgeGraph,
    queries: Iterable[Triple],
    max_hops: int = DEFAULT_MAX_HOPS,
    backend: str | None = None,
) -> CollectedPaths:
    """Enumerate paths for every query; per-query errors are recorded
    instead of aborting the batch. Output order follows input order."""
    out = CollectedPaths()
    n = 0
    for query in queries:
        query = (int(query[0]), int(query[1]), int(query[2]))
        try:
            ps = enumerate_paths(kg, query, max_hops=max_hops, backend=backend)
        except UnknownNameError as exc:
            out.failures.append((query, str(exc)))
            continue
        out.by_query[query] = ps
        n += len(ps)
        if len(out.by_query) % 1000 == 0:
            logger.info("enumerated %d queries, %d paths", len(out.by_query), n)
    logger.info(
        "path collection done: %d queries, %d paths, %d failures",
        len(out.by_query), n, len(out.failures),
    )
    return out


def is_valid_walk(kg: KnowledgeGraph, path: Path) -> bool:
    """True iff every consecutive step is an edge of the augmented train graph."""
    if not path.steps:
        return False
    cur = path.head
    for r, e in path.steps:
        if not (0 <= cur < kg.n_entities) or not (0 <= e < kg.n_entities):
            return False
        if not (0 <= r < kg.n_relations):
            return False
        if not kg.has_train_edge(cur, r, e):
            return False
        cur = e
    return True


def has_valid_path(kg: KnowledgeGraph, query: Triple, model_paths: Sequence[Path]) -> bool:
    """The found-path indicator: does any claimed path actually connect the
    query head to the query tail on the augmented train graph?"""
    h, _, t = query
    for p in model_paths:
        if p.head == h and p.steps and p.tail == t and is_valid_walk(kg, p):
            return True
    return False


# ---- paths.jsonl -----------------------------------------------------


def path_to_record(kg: KnowledgeGraph, path: Path) -> dict:
    return {
        "relations": [kg.relation_name(r) for r in path.relations],
        "entities": [kg.entity_name(e) for e in path.entities],
    }


def path_from_record(kg: KnowledgeGraph, head: int, rec: dict) -> Path:
    rels = [kg.relation_id(r) for r in rec["relations"]]
    ents = [kg.entity_id(e) for e in rec["entities"]]
    if len(rels) != len(ents):
        raise ParseError("path record relations/entities length mismatch")
    return Path(head=head, steps=tuple(zip(rels, ents)))


def write_path_sets(
    f: IO[str], kg: KnowledgeGraph, path_sets: Iterable[PathSet]
) -> int:
    n = 0
    for ps in path_sets:
        h, r, t = ps.query
        rec = {
            "head": kg.entity_name(h),
            "relation": kg.relation_name(r),
            "tail": kg.entity_name(t),
            "paths": [path_to_record(kg, p) for p in ps.paths],
        }
        f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        n += 1
    return n


def read_path_sets(f: IO[str], kg: KnowledgeGraph) -> Iterator[PathSet]:
    for no, line in enumerate(f, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            h = kg.entity_id(rec["head"])
            r = kg.relation_id(rec["relation"])
            t = kg.entity_id(rec["tail"])
            paths = [path_from_record(kg, h, p) for p in rec["paths"]]
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad path record: {exc}", no) from exc
        except UnknownNameError as exc:
            raise ParseError(str(exc), no) from exc
        yield PathSet(query=(h, r, t), paths=paths)
