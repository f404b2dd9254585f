"""Knowledge-graph store: interning, train/valid/test splits, inverse
augmentation and the adjacency indexes every other module queries.

Triples live in dense int64 numpy arrays of shape (n, 3). After
``augment_inverses`` the training graph additionally carries one synthetic
inverse edge per train triple, and two sorted edge indexes are built:
head-major (walk expansion, edge membership) and relation-major
(rule grounding).
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import ParseError, UnknownNameError, ValidationError

logger = logging.getLogger(__name__)

INVERSE_MARKER = "^-1"


class Interner:
    """Bijective string <-> dense-id table."""

    __slots__ = ("names", "ids")

    def __init__(self, names: Iterable[str] = ()):
        self.names: list[str] = list(names)
        self.ids: dict[str, int] = {n: i for i, n in enumerate(self.names)}

    def intern(self, name: str) -> int:
        idx = self.ids.get(name)
        if idx is None:
            idx = len(self.names)
            self.names.append(name)
            self.ids[name] = idx
        return idx

    def id_of(self, name: str) -> int:
        try:
            return self.ids[name]
        except KeyError:
            raise UnknownNameError(f"unknown name: {name!r}") from None

    def name_of(self, idx: int) -> str:
        return self.names[idx]

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self.ids


@dataclass(frozen=True)
class LoadReport:
    n_entities: int
    n_relations: int
    n_triples: int
    n_duplicates: int


@dataclass(eq=False)
class Adjacency:
    """Sorted edge indexes over the augmented training graph.

    Head-major arrays are sorted by (head, relation, tail); ``indptr[h]``
    delimits head h's slice and ``key = rel * n_entities + tail`` is strictly
    increasing inside each slice. Relation-major arrays are sorted by
    (relation, head, tail) for grounding scans.
    """

    n_entities: int
    indptr: np.ndarray      # (E+1,) int64
    rel: np.ndarray         # (M,)  int64
    tail: np.ndarray        # (M,)  int64
    key: np.ndarray         # (M,)  int64, rel * E + tail
    rel_indptr: np.ndarray  # (R+1,) int64
    rel_head: np.ndarray    # (M,)  int64
    rel_tail: np.ndarray    # (M,)  int64

    @classmethod
    def build(cls, edges: np.ndarray, n_entities: int, n_relations: int) -> "Adjacency":
        h, r, t = edges[:, 0], edges[:, 1], edges[:, 2]
        order = np.lexsort((t, r, h))
        hs, rs, ts = h[order], r[order], t[order]
        indptr = np.zeros(n_entities + 1, dtype=np.int64)
        np.add.at(indptr, hs + 1, 1)
        np.cumsum(indptr, out=indptr)

        rel_order = np.lexsort((t, h, r))
        rel_indptr = np.zeros(n_relations + 1, dtype=np.int64)
        np.add.at(rel_indptr, r[rel_order] + 1, 1)
        np.cumsum(rel_indptr, out=rel_indptr)

        return cls(
            n_entities=n_entities,
            indptr=indptr,
            rel=rs,
            tail=ts,
            key=rs * n_entities + ts,
            rel_indptr=rel_indptr,
            rel_head=h[rel_order],
            rel_tail=t[rel_order],
        )

    def out_tails(self, head: int, rel: int) -> np.ndarray:
        lo, hi = self.indptr[head], self.indptr[head + 1]
        seg = self.rel[lo:hi]
        a = lo + np.searchsorted(seg, rel, side="left")
        b = lo + np.searchsorted(seg, rel, side="right")
        return self.tail[a:b]

    def has_edge(self, head: int, rel: int, tail: int) -> bool:
        lo, hi = self.indptr[head], self.indptr[head + 1]
        k = rel * self.n_entities + tail
        pos = lo + np.searchsorted(self.key[lo:hi], k)
        return pos < hi and self.key[pos] == k


@dataclass
class KnowledgeGraph:
    """Immutable after construction; see module docstring for layout."""

    entities: Interner
    relations: Interner
    n_base_relations: int
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    augmented: bool = False
    load_report: LoadReport | None = None
    _adj: Adjacency | None = field(default=None, repr=False)

    # ---- lookups ----------------------------------------------------

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def entity_id(self, name: str) -> int:
        return self.entities.id_of(name)

    def relation_id(self, name: str) -> int:
        return self.relations.id_of(name)

    def entity_name(self, idx: int) -> str:
        return self.entities.name_of(idx)

    def relation_name(self, idx: int) -> str:
        return self.relations.name_of(idx)

    def is_inverse(self, rel: int) -> bool:
        return rel >= self.n_base_relations

    def inverse_of(self, rel: int) -> int:
        """Id of r's inverse counterpart; involutive."""
        if not self.augmented:
            raise ValidationError("inverse relations exist only after augment_inverses")
        if rel >= self.n_base_relations:
            return rel - self.n_base_relations
        return rel + self.n_base_relations

    @property
    def adjacency(self) -> Adjacency:
        if self._adj is None:
            raise ValidationError("adjacency requires an augmented graph; call augment_inverses first")
        return self._adj

    def has_train_edge(self, head: int, rel: int, tail: int) -> bool:
        return self.adjacency.has_edge(head, rel, tail)

    def describe(self) -> dict:
        return {
            "entities": self.n_entities,
            "relations": self.n_base_relations,
            "train": int(len(self.train)),
            "valid": int(len(self.valid)),
            "test": int(len(self.test)),
            "augmented": self.augmented,
        }


# ---- loading ---------------------------------------------------------


def _parse_tsv(lines: Iterable[str], start_line: int = 1) -> Iterator[tuple[str, str, str]]:
    for no, raw in enumerate(lines, start=start_line):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", no)
        head, rel, tail = fields
        if not head or not rel or not tail:
            raise ParseError("empty entity or relation string", no)
        if rel.endswith(INVERSE_MARKER):
            raise ParseError(f"relation name ends with reserved marker {INVERSE_MARKER!r}", no)
        yield head, rel, tail


def _intern_triples(
    parsed: Iterable[tuple[str, str, str]],
    entities: Interner,
    relations: Interner,
    seen: set[tuple[int, int, int]],
) -> tuple[np.ndarray, int]:
    rows: list[tuple[int, int, int]] = []
    dups = 0
    for head, rel, tail in parsed:
        row = (entities.intern(head), relations.intern(rel), entities.intern(tail))
        if row in seen:
            dups += 1
            continue
        seen.add(row)
        rows.append(row)
    arr = np.array(rows, dtype=np.int64).reshape(-1, 3)
    return arr, dups


def load_kg(source: IO[str] | Iterable[str], format: str = "tsv") -> KnowledgeGraph:
    """Load a single TSV triple dump; all triples land in the train slot
    of an unsplit graph. Duplicate lines are dropped (counted in the report).
    """
    if format != "tsv":
        raise ValidationError(f"unsupported format: {format!r}")
    entities, relations = Interner(), Interner()
    train, dups = _intern_triples(_parse_tsv(source), entities, relations, set())
    empty = np.empty((0, 3), dtype=np.int64)
    report = LoadReport(len(entities), len(relations), len(train), dups)
    logger.info(
        "loaded %d entities, %d relations, %d triples (%d duplicates removed)",
        report.n_entities, report.n_relations, report.n_triples, report.n_duplicates,
    )
    return KnowledgeGraph(
        entities=entities,
        relations=relations,
        n_base_relations=len(relations),
        train=train,
        valid=empty,
        test=empty,
        load_report=report,
    )


def load_kg_splits(
    train: IO[str] | Iterable[str],
    valid: IO[str] | Iterable[str],
    test: IO[str] | Iterable[str],
) -> KnowledgeGraph:
    """Load pre-split train/valid/test TSV files into one graph.

    Splits must be disjoint; a triple repeated across files is an error
    rather than a silent dedup, since it would break partition disjointness.
    """
    entities, relations = Interner(), Interner()
    seen: set[tuple[int, int, int]] = set()
    arrays = []
    dups = 0
    for name, stream in (("train", train), ("valid", valid), ("test", test)):
        file_seen: set[tuple[int, int, int]] = set()
        arr, in_file_dups = _intern_triples(_parse_tsv(stream), entities, relations, file_seen)
        dups += in_file_dups
        overlap = file_seen & seen
        if overlap:
            raise ValidationError(
                f"{name} split repeats {len(overlap)} triple(s) from an earlier split"
            )
        seen |= file_seen
        arrays.append(arr)
    n_total = sum(len(a) for a in arrays)
    report = LoadReport(len(entities), len(relations), n_total, dups)
    logger.info(
        "loaded %d entities, %d relations, %d triples across splits (%d duplicates removed)",
        report.n_entities, report.n_relations, report.n_triples, report.n_duplicates,
    )
    return KnowledgeGraph(
        entities=entities,
        relations=relations,
        n_base_relations=len(relations),
        train=arrays[0],
        valid=arrays[1],
        test=arrays[2],
        load_report=report,
    )


# ---- splitting & augmentation ---------------------------------------


def split_kg(
    kg: KnowledgeGraph,
    ratios: tuple[float, float, float] = (0.9, 0.05, 0.05),
    seed: int = 0,
) -> KnowledgeGraph:
    """Deterministically shuffle all triples and repartition them.

    Valid/test sizes are floored; the remainder goes to train.
    """
    if kg.augmented:
        raise ValidationError("cannot re-split an augmented graph")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"split ratios must sum to 1, got {sum(ratios)}")
    pool = np.concatenate([kg.train, kg.valid, kg.test], axis=0)
    n = len(pool)
    idx = list(range(n))
    random.Random(seed).shuffle(idx)
    pool = pool[np.array(idx, dtype=np.int64)] if n else pool
    n_valid = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_valid - n_test
    return KnowledgeGraph(
        entities=kg.entities,
        relations=kg.relations,
        n_base_relations=kg.n_base_relations,
        train=pool[:n_train],
        valid=pool[n_train:n_train + n_valid],
        test=pool[n_train + n_valid:],
        load_report=kg.load_report,
    )


def augment_inverses(kg: KnowledgeGraph) -> KnowledgeGraph:
    """Add (t, r^-1, h) for every train triple and build the adjacency
    indexes over the augmented training graph. Valid/test are untouched.
    """
    if kg.augmented:
        raise ValidationError("inverse relations already present")
    relations = Interner(kg.relations.names)
    for name in kg.relations.names:
        relations.intern(name + INVERSE_MARKER)
    n_base = kg.n_base_relations
    inv = np.empty_like(kg.train)
    inv[:, 0] = kg.train[:, 2]
    inv[:, 1] = kg.train[:, 1] + n_base
    inv[:, 2] = kg.train[:, 0]
    edges = np.concatenate([kg.train, inv], axis=0)
    adj = Adjacency.build(edges, len(kg.entities), len(relations))
    return KnowledgeGraph(
        entities=kg.entities,
        relations=relations,
        n_base_relations=n_base,
        train=kg.train,
        valid=kg.valid,
        test=kg.test,
        augmented=True,
        load_report=kg.load_report,
        _adj=adj,
    )
