"""Horn-rule abstraction of paths, closed-world rule statistics, mining,
and rule-based tail ranking.

A rule is a head relation plus an entity-free chain of body relations.
Confidence is support / body_count over distinct (head, tail) grounding
pairs of the body on the augmented train graph; both counts are exact
integers unless a grounding cap forces sampling.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ParseError, UnknownNameError, ValidationError
from .kg import KnowledgeGraph
from .paths import CollectedPaths, Path, Triple
from . import kernels

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Rule:
    head_relation: int
    body: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.body) == 0:
            raise ValidationError("rule body must not be empty")

    def sort_key(self) -> tuple[int, ...]:
        return (self.head_relation, *self.body)


@dataclass(frozen=True)
class RuleStats:
    """Closed-world grounding counts for one rule.

    confidence is None when the body never fires (body_count == 0);
    head_coverage is None when the head relation has no train triples.
    approximate marks counts estimated from a capped grounding sample.
    """

    rule: Rule
    support: int
    body_count: int
    confidence: float | None
    head_coverage: float | None
    approximate: bool = False


@dataclass
class RuleSet:
    rules: list[Rule] = field(default_factory=list)
    stats: dict[Rule, RuleStats] = field(default_factory=dict)
    path_counts: dict[Rule, int] = field(default_factory=dict)
    provenance: str = "abstracted"
    _index: set[Rule] = field(default_factory=set, repr=False)

    def __post_init__(self) -> None:
        self._index.update(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __contains__(self, rule: Rule) -> bool:
        return rule in self._index

    def add(self, rule: Rule) -> None:
        if rule not in self._index:
            self.rules.append(rule)
            self._index.add(rule)


def abstract_path(path: Path, head_relation: int) -> Rule:
    """Drop the entities of a grounded path, keeping the relation chain."""
    if len(path) == 0:
        raise ValidationError("cannot abstract an empty path")
    return Rule(head_relation=head_relation, body=path.relations)


def abstract_paths(collected: CollectedPaths | Mapping[Triple, object]) -> RuleSet:
    """Abstract every enumerated path; deduplicate and count paths per rule."""
    by_query = collected.by_query if isinstance(collected, CollectedPaths) else collected
    rs = RuleSet(provenance="abstracted")
    n_paths = 0
    for (h, r, t), ps in by_query.items():
        for path in ps:
            rule = abstract_path(path, r)
            rs.add(rule)
            rs.path_counts[rule] = rs.path_counts.get(rule, 0) + 1
            n_paths += 1
    logger.info("abstracted %d paths into %d rules", n_paths, len(rs))
    return rs


# ---- statistics ------------------------------------------------------


def _head_triple_count(kg: KnowledgeGraph, head_relation: int) -> int:
    # Inverse-headed rules share the base relation's train count: inverse
    # triples mirror train one-to-one.
    base = head_relation
    if kg.is_inverse(head_relation):
        base = head_relation - kg.n_base_relations
    return int(np.count_nonzero(kg.train[:, 1] == base))


def _rule_seed(seed: int, rule: Rule) -> str:
    # String seeds hash deterministically in random.Random regardless of
    # interpreter hash randomization.
    return f"{seed}:{rule.head_relation}:{','.join(map(str, rule.body))}"


def compute_stats(
    kg: KnowledgeGraph,
    rule: Rule,
    pair_cap: int = 0,
    seed: int = 0,
    backend: str | None = None,
) -> RuleStats:
    """Exact support and body_count for one rule (sampled when the number
    of grounding start entities exceeds pair_cap > 0)."""
    body = np.asarray(rule.body, dtype=np.int64)
    adj = kg.adjacency
    starts = kernels.distinct_heads(adj, int(body[0]))
    approximate = False
    scale = 1.0
    if pair_cap > 0 and starts.size > pair_cap:
        rng = random.Random(_rule_seed(seed, rule))
        picked = sorted(rng.sample(range(starts.size), pair_cap))
        scale = starts.size / pair_cap
        starts = starts[np.asarray(picked, dtype=np.int64)]
        approximate = True

    body_count, support = kernels.ground_counts(
        adj, body, rule.head_relation, starts=starts, backend=backend
    )
    confidence = support / body_count if body_count > 0 else None
    if approximate:
        body_count = int(round(body_count * scale))
        support = int(round(support * scale))
        support = min(support, body_count)

    n_head = _head_triple_count(kg, rule.head_relation)
    head_coverage = support / n_head if n_head > 0 else None
    return RuleStats(
        rule=rule,
        support=int(support),
        body_count=int(body_count),
        confidence=confidence,
        head_coverage=head_coverage,
        approximate=approximate,
    )


def compute_stats_many(
    kg: KnowledgeGraph,
    rules: Sequence[Rule],
    pair_cap: int = 0,
    seed: int = 0,
    backend: str | None = None,
) -> dict[Rule, RuleStats]:
    out: dict[Rule, RuleStats] = {}
    for i, rule in enumerate(rules):
        out[rule] = compute_stats(kg, rule, pair_cap=pair_cap, seed=seed, backend=backend)
        if (i + 1) % 5000 == 0:
            logger.info("stats for %d/%d rules", i + 1, len(rules))
    return out


def mine_ruleset(
    kg: KnowledgeGraph,
    candidates: RuleSet,
    min_confidence: float = 0.001,
    min_head_coverage: float = 0.001,
    pair_cap: int = 0,
    seed: int = 0,
    backend: str | None = None,
) -> RuleSet:
    """Keep candidate rules whose statistics are defined and meet both
    thresholds. Candidate order is preserved."""
    if min_confidence < 0 or min_head_coverage < 0:
        raise ValidationError("thresholds must be non-negative")
    mined = RuleSet(provenance="mined")
    for rule in candidates.rules:
        st = candidates.stats.get(rule)
        if st is None:
            st = compute_stats(kg, rule, pair_cap=pair_cap, seed=seed, backend=backend)
        if st.confidence is None or st.head_coverage is None:
            continue
        if st.confidence >= min_confidence and st.head_coverage >= min_head_coverage:
            mined.add(rule)
            mined.stats[rule] = st
            if rule in candidates.path_counts:
                mined.path_counts[rule] = candidates.path_counts[rule]
    logger.info("mined %d/%d rules", len(mined), len(candidates))
    return mined


# ---- rule application ------------------------------------------------


def match_rule(
    kg: KnowledgeGraph,
    rule: Rule,
    head: int,
    backend: str | None = None,
) -> list[tuple[int, Path]]:
    """Ground the rule body starting at head; one (tail, witness path) per
    grounding, in canonical entity-sequence order."""
    body = np.asarray(rule.body, dtype=np.int64)
    ents = kernels.match_walks(kg.adjacency, head, body, backend=backend)
    out = []
    for row in ents:
        steps = tuple((int(r), int(e)) for r, e in zip(rule.body, row))
        out.append((int(row[-1]), Path(head=head, steps=steps)))
    return out


@dataclass
class RankedTail:
    tail: int
    confidences: tuple[float, ...]
    best_path: Path


def _cmp_ranked(a: RankedTail, b: RankedTail) -> int:
    # Descending confidence vectors compared elementwise; on a shared
    # prefix the longer vector wins, then lower tail id.
    va, vb = a.confidences, b.confidences
    for x, y in zip(va, vb):
        if x != y:
            return -1 if x > y else 1
    if len(va) != len(vb):
        return -1 if len(va) > len(vb) else 1
    if a.tail != b.tail:
        return -1 if a.tail < b.tail else 1
    return 0


def rank_tails_max_aggregation(
    kg: KnowledgeGraph,
    mined: RuleSet,
    query: tuple[int, int],
    top_k: int = 0,
    backend: str | None = None,
) -> list[RankedTail]:
    """Rank candidate tails for (head, relation) by the confidences of the
    mined rules that fire, best rule first; ties broken by the rest of each
    tail's sorted confidence vector, then by tail id."""
    head, relation = query
    applicable = []
    for rule in mined.rules:
        if rule.head_relation != relation:
            continue
        st = mined.stats.get(rule)
        if st is None or st.confidence is None:
            raise ValidationError("ranking requires defined confidence for every rule")
        applicable.append((st.confidence, rule))
    applicable.sort(key=lambda cr: (-cr[0], cr[1].sort_key()))

    vectors: dict[int, list[float]] = {}
    witness: dict[int, Path] = {}
    for conf, rule in applicable:
        seen_tails: set[int] = set()
        for tail, path in match_rule(kg, rule, head, backend=backend):
            if tail in seen_tails:
                continue
            seen_tails.add(tail)
            vectors.setdefault(tail, []).append(conf)
            if tail not in witness:
                witness[tail] = path

    ranked = [
        RankedTail(tail=t, confidences=tuple(v), best_path=witness[t])
        for t, v in vectors.items()
    ]
    ranked.sort(key=cmp_to_key(_cmp_ranked))
    if top_k and top_k > 0:
        ranked = ranked[:top_k]
    return ranked


# ---- rules.jsonl -----------------------------------------------------


def rule_to_record(kg: KnowledgeGraph, rule: Rule, stats: RuleStats | None,
                   n_paths: int | None = None) -> dict:
    rec = {
        "head": kg.relation_name(rule.head_relation),
        "body": [kg.relation_name(r) for r in rule.body],
        "confidence": None if stats is None else stats.confidence,
        "head_coverage": None if stats is None else stats.head_coverage,
        "support": 0 if stats is None else stats.support,
        "body_count": 0 if stats is None else stats.body_count,
    }
    if n_paths is not None:
        rec["n_paths"] = n_paths
    return rec


def write_ruleset(f: IO[str], kg: KnowledgeGraph, rs: RuleSet) -> int:
    n = 0
    for rule in rs.rules:
        rec = rule_to_record(kg, rule, rs.stats.get(rule), rs.path_counts.get(rule))
        f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        n += 1
    return n


def read_ruleset(f: IO[str], kg: KnowledgeGraph, provenance: str = "loaded") -> RuleSet:
    rs = RuleSet(provenance=provenance)
    for no, line in enumerate(f, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            head = kg.relation_id(rec["head"])
            body = tuple(kg.relation_id(r) for r in rec["body"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad rule record: {exc}", no) from exc
        except UnknownNameError as exc:
            raise ParseError(str(exc), no) from exc
        rule = Rule(head_relation=head, body=body)
        if rule in rs:
            raise ParseError("duplicate rule", no)
        rs.add(rule)
        conf = rec.get("confidence")
        hc = rec.get("head_coverage")
        support = int(rec.get("support", 0))
        body_count = int(rec.get("body_count", 0))
        if conf is not None or hc is not None or support or body_count:
            rs.stats[rule] = RuleStats(
                rule=rule,
                support=support,
                body_count=body_count,
                confidence=conf,
                head_coverage=hc,
                approximate=bool(rec.get("approximate", False)),
            )
        if "n_paths" in rec:
            rs.path_counts[rule] = int(rec["n_paths"])
    return rs
