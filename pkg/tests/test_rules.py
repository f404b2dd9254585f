"""Rule abstraction, closed-world statistics against a brute-force oracle,
mining thresholds and rule-based ranking."""

import random
from io import StringIO

import numpy as np
import pytest

from kginterp.errors import ParseError, ValidationError
from kginterp.paths import CollectedPaths, Path, PathSet, enumerate_paths
from kginterp.rules import (
    Rule,
    RuleSet,
    abstract_path,
    abstract_paths,
    compute_stats,
    match_rule,
    mine_ruleset,
    rank_tails_max_aggregation,
    read_ruleset,
    write_ruleset,
)

from conftest import make_kg, oracle_ground_counts, random_triples


def _collected(kg, queries, **kw):
    return CollectedPaths(
        by_query={q: enumerate_paths(kg, q, **kw) for q in queries}
    )


def test_abstract_drops_entities():
    p = Path(head=7, steps=((1, 3), (2, 9)))
    rule = abstract_path(p, head_relation=5)
    assert rule == Rule(head_relation=5, body=(1, 2))


def test_abstract_rejects_empty_path():
    with pytest.raises(ValidationError):
        abstract_path(Path(head=0, steps=()), 1)


def test_empty_rule_body_rejected():
    with pytest.raises(ValidationError):
        Rule(head_relation=0, body=())


def test_abstract_paths_dedups_and_counts():
    kg = make_kg(
        train=[("a", "r1", "b"), ("b", "r2", "c"), ("x", "r1", "y"), ("y", "r2", "z")],
        test=[("a", "rh", "c"), ("x", "rh", "z")],
    )
    queries = [tuple(map(int, q)) for q in kg.test]
    rs = abstract_paths(_collected(kg, queries))
    rh = kg.relation_id("rh")
    planted = Rule(rh, (kg.relation_id("r1"), kg.relation_id("r2")))
    assert planted in rs
    # the two entity-disjoint paths collapse onto one rule
    assert rs.path_counts[planted] == 2
    assert len(rs.rules) == len(set(rs.rules))


@pytest.mark.parametrize("seed", range(20))
def test_stats_match_brute_force_oracle(seed):
    rng = random.Random(seed)
    triples = random_triples(rng, max_entities=16, max_relations=4, max_triples=70)
    kg = make_kg(train=triples)
    rel_names = [kg.relation_name(r) for r in range(kg.n_relations)]
    for _ in range(8):
        body_names = [rng.choice(rel_names) for _ in range(rng.randint(1, 3))]
        head_name = rng.choice(rel_names)
        rule = Rule(
            head_relation=kg.relation_id(head_name),
            body=tuple(kg.relation_id(r) for r in body_names),
        )
        st = compute_stats(kg, rule)
        want_bc, want_sup = oracle_ground_counts(triples, body_names, head_name)
        assert st.body_count == want_bc
        assert st.support == want_sup
        if want_bc:
            assert st.confidence == want_sup / want_bc
        else:
            assert st.confidence is None


def test_head_coverage_denominator_is_train_head_count():
    kg = make_kg(
        train=[
            ("a", "r1", "b"), ("b", "r2", "c"), ("a", "rh", "c"),
            ("p", "rh", "q"), ("u", "rh", "v"),
        ],
    )
    rule = Rule(kg.relation_id("rh"), (kg.relation_id("r1"), kg.relation_id("r2")))
    st = compute_stats(kg, rule)
    assert st.support == 1
    assert st.head_coverage == 1 / 3  # three rh train triples


def test_head_coverage_undefined_without_head_triples():
    kg = make_kg(train=[("a", "r1", "b")], test=[("a", "rh", "b")])
    rule = Rule(kg.relation_id("rh"), (kg.relation_id("r1"),))
    st = compute_stats(kg, rule)
    assert st.body_count == 1
    assert st.head_coverage is None


def test_inverse_headed_rule_uses_base_train_count():
    kg = make_kg(train=[("a", "r1", "b"), ("b", "rh", "a"), ("c", "rh", "d")])
    inv_rh = kg.inverse_of(kg.relation_id("rh"))
    rule = Rule(inv_rh, (kg.relation_id("r1"),))
    st = compute_stats(kg, rule)
    # coverage denominator counts rh train triples, not rh^-1 edges
    assert st.body_count == 1
    assert st.head_coverage == st.support / 2


def test_sampled_stats_flagged_and_seeded():
    rng = random.Random(4)
    triples = random_triples(rng, max_entities=30, max_relations=3, max_triples=200)
    kg = make_kg(train=triples)
    rule = Rule(kg.relation_id("r0"), (kg.relation_id("r0"), kg.relation_id("r1")))
    exact = compute_stats(kg, rule)
    capped = compute_stats(kg, rule, pair_cap=3, seed=1)
    again = compute_stats(kg, rule, pair_cap=3, seed=1)
    assert capped == again
    if exact.body_count > 0:
        assert capped.approximate
        assert capped.body_count > 0


def test_mine_ruleset_thresholds_inclusive():
    kg = make_kg(
        train=[("a", "r1", "b"), ("a", "rh", "b"), ("c", "r1", "d")],
    )
    rs = RuleSet()
    rule = Rule(kg.relation_id("rh"), (kg.relation_id("r1"),))
    rs.add(rule)
    # confidence 0.5, head_coverage 1.0
    mined = mine_ruleset(kg, rs, min_confidence=0.5, min_head_coverage=1.0)
    assert rule in mined
    mined = mine_ruleset(kg, rs, min_confidence=0.5000001, min_head_coverage=0.0)
    assert rule not in mined


def test_mine_excludes_undefined_confidence():
    kg = make_kg(train=[("a", "r1", "b")], test=[("a", "rh", "b")])
    rs = RuleSet()
    # body relation r2 never fires: r2 only appears via rh in test
    rule = Rule(kg.relation_id("rh"), (kg.relation_id("rh"),))
    rs.add(rule)
    mined = mine_ruleset(kg, rs, min_confidence=0.0, min_head_coverage=0.0)
    assert rule not in mined


def test_match_rule_returns_canonical_witnesses():
    kg = make_kg(train=[
        ("a", "r", "b"), ("a", "r", "c"), ("b", "s", "z"), ("c", "s", "z"),
    ])
    # head relation is irrelevant to grounding; reuse r
    rule = Rule(kg.relation_id("r"), (kg.relation_id("r"), kg.relation_id("s")))
    out = match_rule(kg, rule, kg.entity_id("a"))
    tails = [kg.entity_name(t) for t, _ in out]
    assert tails == ["z", "z"]
    mids = [kg.entity_name(p.steps[0][1]) for _, p in out]
    assert mids == sorted(mids)


def _ranked_names(kg, ranked):
    return [(kg.entity_name(r.tail), r.confidences) for r in ranked]


def _mined_with(kg, rules_conf):
    from kginterp.rules import RuleStats

    rs = RuleSet(provenance="mined")
    for rule, conf in rules_conf:
        rs.add(rule)
        rs.stats[rule] = RuleStats(
            rule=rule, support=1, body_count=1, confidence=conf,
            head_coverage=1.0,
        )
    return rs


def test_max_aggregation_single_best_wins():
    # tail A fired by one 0.9 rule; tail B by two 0.8 rules: A ranks first
    kg = make_kg(train=[
        ("h", "p", "A"),
        ("h", "q", "B"), ("h", "s", "B"),
        ("h", "rh", "x"),
    ])
    rh = kg.relation_id("rh")
    r_p = Rule(rh, (kg.relation_id("p"),))
    r_q = Rule(rh, (kg.relation_id("q"),))
    r_s = Rule(rh, (kg.relation_id("s"),))
    mined = _mined_with(kg, [(r_p, 0.9), (r_q, 0.8), (r_s, 0.8)])
    ranked = rank_tails_max_aggregation(kg, mined, (kg.entity_id("h"), rh))
    assert _ranked_names(kg, ranked) == [
        ("A", (0.9,)), ("B", (0.8, 0.8)),
    ]


def test_max_aggregation_vector_tiebreak():
    # both tails share best 0.9; B's second rule 0.5 beats A's 0.1
    kg = make_kg(train=[
        ("h", "p", "A"), ("h", "q", "A"),
        ("h", "p", "B"), ("h", "s", "B"),
        ("h", "rh", "x"),
    ])
    rh = kg.relation_id("rh")
    r_p = Rule(rh, (kg.relation_id("p"),))
    r_q = Rule(rh, (kg.relation_id("q"),))
    r_s = Rule(rh, (kg.relation_id("s"),))
    mined = _mined_with(kg, [(r_p, 0.9), (r_q, 0.1), (r_s, 0.5)])
    ranked = rank_tails_max_aggregation(kg, mined, (kg.entity_id("h"), rh))
    assert _ranked_names(kg, ranked) == [
        ("B", (0.9, 0.5)), ("A", (0.9, 0.1)),
    ]


def test_max_aggregation_longer_vector_wins_on_shared_prefix():
    kg = make_kg(train=[
        ("h", "p", "A"),
        ("h", "p", "B"), ("h", "s", "B"),
        ("h", "rh", "x"),
    ])
    rh = kg.relation_id("rh")
    r_p = Rule(rh, (kg.relation_id("p"),))
    r_s = Rule(rh, (kg.relation_id("s"),))
    mined = _mined_with(kg, [(r_p, 0.9), (r_s, 0.5)])
    ranked = rank_tails_max_aggregation(kg, mined, (kg.entity_id("h"), rh))
    assert _ranked_names(kg, ranked) == [("B", (0.9, 0.5)), ("A", (0.9,))]


def test_max_aggregation_duplicate_groundings_count_once():
    # one rule reaching the same tail through two mid entities adds a
    # single confidence entry
    kg = make_kg(train=[
        ("h", "p", "m1"), ("h", "p", "m2"),
        ("m1", "q", "T"), ("m2", "q", "T"),
        ("h", "rh", "x"),
    ])
    rh = kg.relation_id("rh")
    rule = Rule(rh, (kg.relation_id("p"), kg.relation_id("q")))
    mined = _mined_with(kg, [(rule, 0.7)])
    ranked = rank_tails_max_aggregation(kg, mined, (kg.entity_id("h"), rh))
    assert _ranked_names(kg, ranked) == [("T", (0.7,))]
    # witness is the canonical (first) grounding
    assert kg.entity_name(ranked[0].best_path.steps[0][1]) == "m1"


def test_max_aggregation_tail_id_breaks_exact_ties():
    kg = make_kg(train=[
        ("h", "p", "B"), ("h", "p", "A"),
        ("h", "rh", "x"),
    ])
    rh = kg.relation_id("rh")
    rule = Rule(rh, (kg.relation_id("p"),))
    mined = _mined_with(kg, [(rule, 0.9)])
    ranked = rank_tails_max_aggregation(kg, mined, (kg.entity_id("h"), rh))
    names = [kg.entity_name(r.tail) for r in ranked]
    assert names == sorted(names, key=lambda n: kg.entity_id(n))


def test_rank_requires_defined_confidence():
    kg = make_kg(train=[("h", "p", "A"), ("h", "rh", "x")])
    rh = kg.relation_id("rh")
    rule = Rule(rh, (kg.relation_id("p"),))
    rs = RuleSet(provenance="mined")
    rs.add(rule)
    with pytest.raises(ValidationError):
        rank_tails_max_aggregation(kg, rs, (kg.entity_id("h"), rh))


def test_ruleset_jsonl_round_trip():
    kg = make_kg(
        train=[("a", "r1", "b"), ("b", "r2", "c"), ("a", "rh", "c")],
    )
    queries = [(kg.entity_id("a"), kg.relation_id("rh"), kg.entity_id("c"))]
    rs = abstract_paths(_collected(kg, queries))
    rs.stats = {r: compute_stats(kg, r) for r in rs.rules}
    buf = StringIO()
    write_ruleset(buf, kg, rs)
    buf.seek(0)
    loaded = read_ruleset(buf, kg)
    assert loaded.rules == rs.rules
    assert loaded.path_counts == rs.path_counts
    for rule in rs.rules:
        assert loaded.stats[rule].confidence == rs.stats[rule].confidence
        assert loaded.stats[rule].support == rs.stats[rule].support


def test_read_ruleset_rejects_duplicates(chain_kg):
    row = '{"head": "r3", "body": ["r1", "r2"], "confidence": null, "head_coverage": null, "support": 0, "body_count": 0}\n'
    with pytest.raises(ParseError, match="duplicate"):
        read_ruleset(StringIO(row + row), chain_kg)
