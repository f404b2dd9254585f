"""Rule-score benchmarks: annotation-backed (kind A) and
calibrated-confidence (kind R).

Kind A assigns every rule a score in [0, 1]: annotated rules get the mean
of their sampled path grades, the rest fall back to a per-tier constant.
Kind R discretizes mined confidences through two thresholds fitted against
golden class labels; rules outside the mined set score zero.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, UnknownNameError, ValidationError
from .kg import KnowledgeGraph
from .paths import CollectedPaths, Path
from .rules import Rule, RuleSet, abstract_path

logger = logging.getLogger(__name__)

TIER_H = "H"
TIER_L = "L"
TIER_O = "O"

GRADES = (0.0, 0.5, 1.0)
CLASSES = ("unreasonable", "partial", "reasonable")

DEFAULT_H_THRESHOLD = 0.01
DEFAULT_L_SCORE = 0.005
DEFAULT_O_SCORE = 0.069
DEFAULT_H_FALLBACK = 0.216
DEFAULT_PER_RULE = 10


def classify_rules(
    all_rules: RuleSet,
    mined: RuleSet,
    confidence_threshold: float = DEFAULT_H_THRESHOLD,
) -> dict[Rule, str]:
    """Split the abstracted rule universe into tiers: H (mined, confident),
    L (mined, low confidence), O (outside the mined set)."""
    tiers: dict[Rule, str] = {}
    for rule in all_rules.rules:
        if rule in mined:
            st = mined.stats.get(rule)
            if st is None or st.confidence is None:
                logger.warning("mined rule without defined confidence treated as outside tier")
                tiers[rule] = TIER_O
            elif st.confidence >= confidence_threshold:
                tiers[rule] = TIER_H
            else:
                tiers[rule] = TIER_L
        else:
            tiers[rule] = TIER_O
    return tiers


def tier_report(tiers: Mapping[Rule, str], path_counts: Mapping[Rule, int]) -> dict:
    """Rule and path counts per tier."""
    out = {t: {"rules": 0, "paths": 0} for t in (TIER_H, TIER_L, TIER_O)}
    for rule, tier in tiers.items():
        out[tier]["rules"] += 1
        out[tier]["paths"] += path_counts.get(rule, 0)
    return out


def sample_annotation_tasks(
    collected: CollectedPaths,
    h_rules: Iterable[Rule],
    per_rule: int = DEFAULT_PER_RULE,
    seed: int = 0,
) -> list[tuple[Rule, list[Path]]]:
    """Pick up to per_rule enumerated paths for each confident rule.

    Sampling is seeded per rule, so adding or removing other rules never
    changes a rule's sample. Rules with no matching enumerated path are
    skipped with a warning.
    """
    if per_rule <= 0:
        raise ValidationError("per_rule must be positive")
    wanted = set(h_rules)
    pool: dict[Rule, list[Path]] = {r: [] for r in wanted}
    for (h, r, t), ps in collected.by_query.items():
        for path in ps:
            rule = abstract_path(path, r)
            if rule in wanted:
                pool[rule].append(path)

    out: list[tuple[Rule, list[Path]]] = []
    for rule in sorted(wanted, key=Rule.sort_key):
        paths = pool[rule]
        if not paths:
            logger.warning(
                "rule %s has no enumerated paths; excluded from annotation",
                rule.sort_key(),
            )
            continue
        if len(paths) > per_rule:
            rng = random.Random(f"{seed}:{rule.head_relation}:{','.join(map(str, rule.body))}")
            idx = sorted(rng.sample(range(len(paths)), per_rule))
            paths = [paths[i] for i in idx]
        out.append((rule, paths))
    return out


def aggregate_rule_score(grades: Sequence[float]) -> float:
    """Arithmetic mean of path grades; each grade must be 0, 0.5 or 1."""
    if not grades:
        raise ValidationError("cannot aggregate an empty grade list")
    for g in grades:
        if g not in GRADES:
            raise ValidationError(f"grade {g!r} not in {GRADES}")
    return sum(grades) / len(grades)


@dataclass(frozen=True)
class AnnotatedRule:
    rule: Rule
    path_grades: tuple[float, ...]
    n_paths: int

    @property
    def score(self) -> float:
        return aggregate_rule_score(self.path_grades)


@dataclass
class Benchmark:
    """A total scoring function over rules.

    scores holds explicit per-rule entries; any other rule falls back to
    o_score (kind A: tier-O constant; kind R: zero for unmined rules).
    """

    kind: str
    scores: dict[Rule, float] = field(default_factory=dict)
    sources: dict[Rule, str] = field(default_factory=dict)
    l_score: float = DEFAULT_L_SCORE
    o_score: float = DEFAULT_O_SCORE
    h1: float | None = None
    h2: float | None = None
    max_hops: int = 3
    overlength_score: float = 0.0
    annotation_path_counts: dict[Rule, int] = field(default_factory=dict)

    def score_rule(self, rule: Rule) -> float:
        score, _ = self.score_rule_detail(rule)
        return score

    def score_rule_detail(self, rule: Rule) -> tuple[float, str]:
        if len(rule.body) > self.max_hops:
            logger.warning("rule body longer than %d hops scored %s",
                           self.max_hops, self.overlength_score)
            return self.overlength_score, "overlength"
        if rule in self.scores:
            return self.scores[rule], self.sources.get(rule, "tier")
        return self.o_score, "fallback"

    def score_path(self, path: Path, head_relation: int) -> float:
        score, _ = self.score_path_detail(path, head_relation)
        return score

    def score_path_detail(self, path: Path, head_relation: int) -> tuple[float, str]:
        if len(path) > self.max_hops:
            return self.overlength_score, "overlength"
        return self.score_rule_detail(abstract_path(path, head_relation))


def build_a_benchmark(
    annotated: Sequence[AnnotatedRule],
    tiers: Mapping[Rule, str],
    l_score: float = DEFAULT_L_SCORE,
    o_score: float = DEFAULT_O_SCORE,
    h_fallback: float = DEFAULT_H_FALLBACK,
    max_hops: int = 3,
) -> Benchmark:
    """Annotation-backed benchmark over the whole rule universe."""
    scores = {}
    counts = {}
    for ar in annotated:
        if ar.rule in scores:
            raise ValidationError("duplicate annotated rule")
        scores[ar.rule] = ar.score
        counts[ar.rule] = ar.n_paths
    return build_a_benchmark_from_scores(
        scores, tiers, path_counts=counts,
        l_score=l_score, o_score=o_score, h_fallback=h_fallback, max_hops=max_hops,
    )


def build_a_benchmark_from_scores(
    annotated_scores: Mapping[Rule, float],
    tiers: Mapping[Rule, str],
    path_counts: Mapping[Rule, int] | None = None,
    l_score: float = DEFAULT_L_SCORE,
    o_score: float = DEFAULT_O_SCORE,
    h_fallback: float = DEFAULT_H_FALLBACK,
    max_hops: int = 3,
) -> Benchmark:
    """As build_a_benchmark, but from already-aggregated per-rule scores
    (the shape the annotation export produces)."""
    bm = Benchmark(kind="A", l_score=l_score, o_score=o_score, max_hops=max_hops)
    seen: set[Rule] = set()
    for rule, score in annotated_scores.items():
        if tiers.get(rule) != TIER_H:
            raise ValidationError("annotated rule is not in the confident tier")
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"annotated score {score} outside [0, 1]")
        seen.add(rule)
        bm.scores[rule] = score
        bm.sources[rule] = "annotated"
        if path_counts and rule in path_counts:
            bm.annotation_path_counts[rule] = path_counts[rule]

    n_h_fallback = 0
    for rule, tier in tiers.items():
        if rule in seen:
            continue
        if tier == TIER_H:
            bm.scores[rule] = h_fallback
            bm.sources[rule] = "tier"
            n_h_fallback += 1
        elif tier == TIER_L:
            bm.scores[rule] = l_score
            bm.sources[rule] = "tier"
        else:
            bm.scores[rule] = o_score
            bm.sources[rule] = "tier"
    if n_h_fallback:
        logger.warning("%d confident rules lacked annotations; scored %s",
                       n_h_fallback, h_fallback)
    return bm


# ---- calibration -----------------------------------------------------


@dataclass
class CalibrationResult:
    h1: float
    h2: float
    micro_f1: float
    confusion: np.ndarray  # rows: golden class, cols: predicted class
    n_labeled: int


def _discretize(confidence: float, h1: float, h2: float) -> int:
    if confidence >= h2:
        return 2
    if confidence >= h1:
        return 1
    return 0


def calibrate_thresholds(
    mined: RuleSet,
    golden_labels: Mapping[Rule, str],
) -> CalibrationResult:
    """Fit (h1, h2), h1 <= h2, mapping confidence to the three classes so
    that micro-F1 against the golden labels is maximal.

    For single-label multiclass prediction micro-F1 equals plain accuracy,
    which makes an exact sweep over candidate threshold pairs cheap: only
    observed confidences (plus sentinels below and above them all) can
    change the prediction of any rule.
    """
    if not golden_labels:
        raise ValidationError("calibration needs at least one labeled rule")
    conf = np.empty(len(golden_labels), dtype=np.float64)
    cls = np.empty(len(golden_labels), dtype=np.int64)
    for i, (rule, label) in enumerate(sorted(golden_labels.items(), key=lambda kv: kv[0].sort_key())):
        if label not in CLASSES:
            raise ValidationError(f"unknown class label {label!r}")
        st = mined.stats.get(rule)
        if st is None or st.confidence is None:
            raise ValidationError("labeled rule lacks a defined confidence")
        conf[i] = st.confidence
        cls[i] = CLASSES.index(label)

    n = conf.size
    cand = np.unique(np.concatenate([[0.0], conf, [np.max(conf) + 1.0]]))
    m = cand.size
    # below[k][i] = how many class-k rules have confidence < cand[i]
    below = np.empty((3, m), dtype=np.int64)
    for k in range(3):
        below[k] = np.searchsorted(np.sort(conf[cls == k]), cand, side="left")
    n_k = np.bincount(cls, minlength=3)

    # correct(i, j) with h1 = cand[i] <= h2 = cand[j]:
    #   class 0 right when conf < h1, class 1 when h1 <= conf < h2,
    #   class 2 when conf >= h2.
    correct = (
        below[0][:, None]
        + (below[1][None, :] - below[1][:, None])
        + (n_k[2] - below[2][None, :])
    )
    correct = np.where(np.tri(m, m, -1, dtype=bool).T | np.eye(m, dtype=bool), correct, -1)
    flat = int(np.argmax(correct))
    i, j = divmod(flat, m)
    h1, h2 = float(cand[i]), float(cand[j])

    pred = np.where(conf >= h2, 2, np.where(conf >= h1, 1, 0))
    confusion = np.zeros((3, 3), dtype=np.int64)
    np.add.at(confusion, (cls, pred), 1)
    tp = int(np.trace(confusion))
    precision = recall = tp / n
    micro_f1 = 2 * precision * recall / (precision + recall) if tp else 0.0
    if tp and abs(micro_f1 - tp / n) > 1e-12:
        raise AssertionError("micro-F1 must equal accuracy for single-label prediction")
    if correct[i, j] != tp:
        raise AssertionError("sweep disagrees with direct confusion count")
    return CalibrationResult(h1=h1, h2=h2, micro_f1=micro_f1, confusion=confusion, n_labeled=n)


def build_r_benchmark(
    mined: RuleSet,
    calibration: CalibrationResult,
    max_hops: int = 3,
) -> Benchmark:
    """Confidence-discretized benchmark; rules outside the mined set score 0."""
    bm = Benchmark(
        kind="R",
        l_score=0.0,
        o_score=0.0,
        h1=calibration.h1,
        h2=calibration.h2,
        max_hops=max_hops,
    )
    for rule in mined.rules:
        st = mined.stats.get(rule)
        if st is None or st.confidence is None:
            raise ValidationError("mined rule lacks a defined confidence")
        bm.scores[rule] = GRADES[_discretize(st.confidence, calibration.h1, calibration.h2)]
        bm.sources[rule] = "calibrated"
    return bm


# ---- reporting -------------------------------------------------------


def benchmark_stats(
    bm: Benchmark,
    all_rules: RuleSet,
    kg: KnowledgeGraph,
    min_rules_per_relation: int = 10,
    list_size: int = 20,
    n_bins: int = 10,
) -> dict:
    """Descriptive statistics over the scored rule universe."""
    scores = np.array([bm.score_rule(r) for r in all_rules.rules], dtype=np.float64)

    values, counts = (np.empty(0),) * 2 if scores.size == 0 else np.unique(scores, return_counts=True)
    histogram = [
        {"score": float(v), "count": int(c)} for v, c in zip(values, counts)
    ]

    by_rel: dict[int, list[float]] = {}
    for rule, s in zip(all_rules.rules, scores):
        by_rel.setdefault(rule.head_relation, []).append(float(s))
    means = [
        {"relation": kg.relation_name(rel), "mean_score": float(np.mean(v)), "n_rules": len(v)}
        for rel, v in by_rel.items()
        if len(v) >= min_rules_per_relation
    ]
    means.sort(key=lambda d: (-d["mean_score"], d["relation"]))
    relation_means = {
        "top": means[:list_size],
        "bottom": sorted(means[-list_size:], key=lambda d: (d["mean_score"], d["relation"])),
        "n_qualifying": len(means),
    }

    pairs = [
        (st.confidence, float(s))
        for rule, s in zip(all_rules.rules, scores)
        if (st := all_rules.stats.get(rule)) is not None and st.confidence is not None
    ]
    if pairs:
        c = np.array([p[0] for p in pairs])
        s = np.array([p[1] for p in pairs])
        joint, c_edges, s_edges = np.histogram2d(c, s, bins=n_bins, range=[[0, 1], [0, 1]])
        conf_vs_score = {
            "confidence_edges": [float(x) for x in c_edges],
            "score_edges": [float(x) for x in s_edges],
            "counts": joint.astype(int).tolist(),
            "n_rules": len(pairs),
        }
    else:
        conf_vs_score = {"confidence_edges": [], "score_edges": [], "counts": [], "n_rules": 0}

    pp_values: dict[int, int] = {}
    for n in bm.annotation_path_counts.values():
        pp_values[n] = pp_values.get(n, 0) + 1
    paths_per_rule = [
        {"n_paths": k, "count": v} for k, v in sorted(pp_values.items())
    ]

    return {
        "kind": bm.kind,
        "n_rules": len(all_rules),
        "score_histogram": histogram,
        "relation_means": relation_means,
        "confidence_vs_score": conf_vs_score,
        "annotation_paths_per_rule": paths_per_rule,
    }


# ---- benchmark.jsonl -------------------------------------------------


def write_benchmark(f: IO[str], kg: KnowledgeGraph, bm: Benchmark) -> int:
    header = {
        "kind": bm.kind,
        "L_score": bm.l_score,
        "O_score": bm.o_score,
        "h1": bm.h1,
        "h2": bm.h2,
    }
    f.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
    rows = []
    for rule, score in bm.scores.items():
        rec = {
            "head": kg.relation_name(rule.head_relation),
            "body": [kg.relation_name(r) for r in rule.body],
            "score": score,
            "source": bm.sources.get(rule, "tier"),
        }
        if rule in bm.annotation_path_counts:
            rec["n_paths"] = bm.annotation_path_counts[rule]
        rows.append(rec)
    rows.sort(key=lambda r: (r["head"], r["body"]))
    for rec in rows:
        f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    return len(rows)


def load_benchmark(f: IO[str], kg: KnowledgeGraph, max_hops: int = 3) -> Benchmark:
    """Read a benchmark bound to kg's relation vocabulary. Rows naming
    relations absent from the graph are skipped with a warning."""
    first = None
    for no, line in enumerate(f, start=1):
        line = line.strip()
        if line:
            first = (no, line)
            break
    if first is None:
        raise ParseError("benchmark file is empty")
    no, line = first
    try:
        header = json.loads(line)
        kind = header["kind"]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad benchmark header: {exc}", no) from exc
    if kind not in ("A", "R"):
        raise ParseError(f"unknown benchmark kind {kind!r}", no)
    bm = Benchmark(
        kind=kind,
        l_score=float(header.get("L_score", 0.0)),
        o_score=float(header.get("O_score", 0.0)),
        h1=header.get("h1"),
        h2=header.get("h2"),
        max_hops=max_hops,
    )
    n_skipped = 0
    for no, line in enumerate(f, start=no + 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            head_name = rec["head"]
            body_names = rec["body"]
            score = float(rec["score"])
            source = rec.get("source", "tier")
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad benchmark record: {exc}", no) from exc
        try:
            rule = Rule(
                head_relation=kg.relation_id(head_name),
                body=tuple(kg.relation_id(r) for r in body_names),
            )
        except UnknownNameError:
            n_skipped += 1
            continue
        bm.scores[rule] = score
        bm.sources[rule] = source
        if "n_paths" in rec:
            bm.annotation_path_counts[rule] = int(rec["n_paths"])
    if n_skipped:
        logger.warning("skipped %d benchmark rows naming unknown relations", n_skipped)
    return bm
