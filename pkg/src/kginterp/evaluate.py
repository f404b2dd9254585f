"""Model evaluation: link-prediction quality plus interpretability.

Three interpretability quantities per model on the test split:
  path recall   PR = found / |test|  (a valid claimed path exists)
  local score   LI = mean benchmark score of each found triple's best path
  global score  GI = PR * LI         (0 when LI is undefined)

The upper bound variant scores every enumerated path and keeps the best
one per triple, bounding what any path-producing model could reach.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from .benchmark import Benchmark
from .errors import ParseError, UnknownNameError, ValidationError
from .kg import KnowledgeGraph
from .paths import (
    CollectedPaths,
    Path,
    PathSet,
    Triple,
    has_valid_path,
    is_valid_walk,
    path_from_record,
    path_to_record,
)

logger = logging.getLogger(__name__)

HITS_KS = (1, 3, 10)


@dataclass
class PredictionRecord:
    head: int
    relation: int
    gold_tail: int
    ranking: list[tuple[int, float]] = field(default_factory=list)
    paths: list[tuple[Path, float]] = field(default_factory=list)

    @property
    def query(self) -> Triple:
        return (self.head, self.relation, self.gold_tail)


@dataclass
class LinkPredictionMetrics:
    mrr: float
    hits: dict[int, float]
    n_records: int


def _gold_rank(record: PredictionRecord, known_tails: set[int] | None = None) -> int | None:
    """1-based rank of the gold tail, or None when absent from the ranking.

    known_tails, when given, removes other true tails above the gold one
    (the filtered convention); the gold itself always stays.
    """
    seen: set[int] = set()
    rank = 0
    for tail, _ in record.ranking:
        if tail in seen:
            raise ValidationError("duplicate tail in ranking")
        seen.add(tail)
        if known_tails is not None and tail != record.gold_tail and tail in known_tails:
            continue
        rank += 1
        if tail == record.gold_tail:
            return rank
    return None


def link_prediction_metrics(
    records: Sequence[PredictionRecord],
    filter_tails: Mapping[tuple[int, int], set[int]] | None = None,
) -> LinkPredictionMetrics:
    """MRR and Hits@k over rankings; an absent gold tail contributes zero."""
    if not records:
        raise ValidationError("no prediction records to evaluate")
    rr_sum = 0.0
    hit_counts = {k: 0 for k in HITS_KS}
    for rec in records:
        known = filter_tails.get((rec.head, rec.relation)) if filter_tails else None
        rank = _gold_rank(rec, known)
        if rank is not None:
            rr_sum += 1.0 / rank
            for k in HITS_KS:
                if rank <= k:
                    hit_counts[k] += 1
    n = len(records)
    return LinkPredictionMetrics(
        mrr=rr_sum / n,
        hits={k: hit_counts[k] / n for k in HITS_KS},
        n_records=n,
    )


def _check_records_against_test(
    kg: KnowledgeGraph, records: Sequence[PredictionRecord]
) -> None:
    test = {(int(h), int(r), int(t)) for h, r, t in kg.test}
    seen: set[Triple] = set()
    for rec in records:
        q = rec.query
        if q not in test:
            raise ValidationError(f"prediction record {q} is not a test triple")
        if q in seen:
            raise ValidationError(f"duplicate prediction record for {q}")
        seen.add(q)
    if len(seen) < len(test):
        logger.warning(
            "%d test triples have no prediction record; they count as not found",
            len(test) - len(seen),
        )


def _found(kg: KnowledgeGraph, rec: PredictionRecord) -> bool:
    return has_valid_path(kg, rec.query, [p for p, _ in rec.paths])


def path_recall(kg: KnowledgeGraph, records: Sequence[PredictionRecord]) -> float:
    """Fraction of test triples with at least one valid claimed path."""
    n_test = kg.test.shape[0]
    if n_test == 0:
        raise ValidationError("empty test split")
    _check_records_against_test(kg, records)
    found = sum(1 for rec in records if _found(kg, rec))
    return found / n_test


def best_valid_path(kg: KnowledgeGraph, rec: PredictionRecord) -> tuple[Path, float] | None:
    """The highest-scored valid claimed path reaching the gold tail; ties
    prefer fewer hops, then canonical step order."""
    best: tuple[float, int, tuple[int, ...], Path] | None = None
    for p, score in rec.paths:
        if not (p.head == rec.head and p.steps and p.tail == rec.gold_tail):
            continue
        if not is_valid_walk(kg, p):
            continue
        key = (-score, len(p), p.sort_key())
        if best is None or key < best[:3]:
            best = (*key, p)
    if best is None:
        return None
    return best[3], -best[0]


def local_interpretability(
    bm: Benchmark,
    kg: KnowledgeGraph,
    records: Sequence[PredictionRecord],
) -> tuple[float | None, list[dict]]:
    """Mean benchmark score of each found triple's best path.

    Returns (LI, per-record detail rows); LI is None when no record has a
    valid path. Rescaling every model path score by a positive factor
    cannot change which path is chosen, so LI is scale-invariant.
    """
    terms = []
    details = []
    for rec in records:
        picked = best_valid_path(kg, rec)
        row: dict = {"query": rec.query, "found": picked is not None}
        if picked is not None:
            path, model_score = picked
            s = bm.score_path(path, rec.relation)
            terms.append(s)
            row["best_path"] = path
            row["model_score"] = model_score
            row["benchmark_score"] = s
        details.append(row)
    if not terms:
        return None, details
    return sum(terms) / len(terms), details


def global_interpretability(pr: float, li: float | None) -> float:
    """GI = PR * LI exactly; zero when LI is undefined."""
    if li is None:
        return 0.0
    return pr * li


@dataclass
class EvaluationReport:
    n_test: int
    n_records: int
    n_found: int
    pr: float
    li: float | None
    gi: float
    link: LinkPredictionMetrics | None = None
    details: list[dict] = field(default_factory=list)


def evaluate_model(
    bm: Benchmark,
    kg: KnowledgeGraph,
    records: Sequence[PredictionRecord],
    filter_tails: Mapping[tuple[int, int], set[int]] | None = None,
) -> EvaluationReport:
    """Full per-model evaluation against one benchmark."""
    pr = path_recall(kg, records)
    li, details = local_interpretability(bm, kg, records)
    link = None
    if any(rec.ranking for rec in records):
        link = link_prediction_metrics(records, filter_tails)
    return EvaluationReport(
        n_test=int(kg.test.shape[0]),
        n_records=len(records),
        n_found=sum(1 for d in details if d["found"]),
        pr=pr,
        li=li,
        gi=global_interpretability(pr, li),
        link=link,
        details=details,
    )


def upper_bound(
    bm: Benchmark,
    kg: KnowledgeGraph,
    collected: CollectedPaths | Mapping[Triple, PathSet],
) -> EvaluationReport:
    """Best achievable PR/LI/GI for any model limited to enumerated paths:
    a triple counts as found when any path exists, and its term is the
    maximum benchmark score over its paths."""
    by_query = collected.by_query if isinstance(collected, CollectedPaths) else collected
    n_test = kg.test.shape[0]
    if n_test == 0:
        raise ValidationError("empty test split")
    terms = []
    details = []
    found = 0
    for h, r, t in kg.test:
        q = (int(h), int(r), int(t))
        ps = by_query.get(q)
        row: dict = {"query": q, "found": bool(ps and len(ps) > 0)}
        if row["found"]:
            found += 1
            best_s = max(bm.score_path(p, q[1]) for p in ps)
            terms.append(best_s)
            row["benchmark_score"] = best_s
        details.append(row)
    pr = found / n_test
    li = sum(terms) / len(terms) if terms else None
    return EvaluationReport(
        n_test=int(n_test),
        n_records=len(by_query),
        n_found=found,
        pr=pr,
        li=li,
        gi=global_interpretability(pr, li),
        link=None,
        details=details,
    )


# ---- golden protocol -------------------------------------------------


@dataclass(frozen=True)
class GoldenTask:
    model: str
    query: Triple
    path: Path


def golden_sample(
    kg: KnowledgeGraph,
    records_by_model: Mapping[str, Sequence[PredictionRecord]],
    per_model: int = 300,
    seed: int = 0,
) -> list[GoldenTask]:
    """Sample each model's best valid paths for human grading and merge
    them into one shuffled, model-blind stream."""
    if per_model <= 0:
        raise ValidationError("per_model must be positive")
    tasks: list[GoldenTask] = []
    for model in sorted(records_by_model):
        pop = []
        for rec in records_by_model[model]:
            picked = best_valid_path(kg, rec)
            if picked is not None:
                pop.append(GoldenTask(model=model, query=rec.query, path=picked[0]))
        if not pop:
            logger.warning("model %s has no valid paths; excluded from golden sample", model)
            continue
        if len(pop) < per_model:
            logger.warning(
                "model %s has only %d valid paths (wanted %d); keeping all",
                model, len(pop), per_model,
            )
            tasks.extend(pop)
        else:
            rng = random.Random(f"{seed}:golden:{model}")
            idx = sorted(rng.sample(range(len(pop)), per_model))
            tasks.extend(pop[i] for i in idx)
    rng = random.Random(f"{seed}:golden:merge")
    rng.shuffle(tasks)
    return tasks


def golden_model_scores(
    graded: Iterable[tuple[str, float]],
) -> dict[str, float]:
    """Mean human grade per model over its graded golden paths."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for model, grade in graded:
        sums[model] = sums.get(model, 0.0) + grade
        counts[model] = counts.get(model, 0) + 1
    if not counts:
        raise ValidationError("no graded golden paths")
    return {m: sums[m] / counts[m] for m in sorted(sums)}


def abs_diff_avg(
    benchmark_scores: Mapping[str, float],
    golden_scores: Mapping[str, float],
) -> float:
    """Mean absolute difference between benchmark-derived and golden
    per-model scores, over the models present in both."""
    common = sorted(set(benchmark_scores) & set(golden_scores))
    if not common:
        raise ValidationError("no models shared between benchmark and golden scores")
    missing = set(benchmark_scores) ^ set(golden_scores)
    if missing:
        logger.warning("models %s present on one side only; ignored", sorted(missing))
    return sum(abs(benchmark_scores[m] - golden_scores[m]) for m in common) / len(common)


# ---- predictions.jsonl / report.json ---------------------------------


def read_predictions(f: IO[str], kg: KnowledgeGraph) -> list[PredictionRecord]:
    records = []
    for no, line in enumerate(f, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            head = kg.entity_id(rec["head"])
            relation = kg.relation_id(rec["relation"])
            gold = kg.entity_id(rec["gold_tail"])
            ranking = [
                (kg.entity_id(r["tail"]), float(r["score"])) for r in rec.get("ranking", [])
            ]
            paths = [
                (path_from_record(kg, head, p), float(p["score"]))
                for p in rec.get("paths", [])
            ]
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad prediction record: {exc}", no) from exc
        except UnknownNameError as exc:
            raise ParseError(str(exc), no) from exc
        records.append(
            PredictionRecord(
                head=head, relation=relation, gold_tail=gold, ranking=ranking, paths=paths
            )
        )
    return records


def write_predictions(f: IO[str], kg: KnowledgeGraph, records: Sequence[PredictionRecord]) -> int:
    n = 0
    for rec in records:
        row = {
            "head": kg.entity_name(rec.head),
            "relation": kg.relation_name(rec.relation),
            "gold_tail": kg.entity_name(rec.gold_tail),
            "ranking": [
                {"tail": kg.entity_name(t), "score": s} for t, s in rec.ranking
            ],
            "paths": [
                {**path_to_record(kg, p), "score": s} for p, s in rec.paths
            ],
        }
        f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        n += 1
    return n


def _display(x: float | None) -> float | None:
    return None if x is None else round(x * 100, 1)


def report_dict(report: EvaluationReport, kg: KnowledgeGraph | None = None) -> dict:
    """JSON-ready report: metrics scaled to percentages with one decimal
    for display, full-precision values kept in a raw block."""
    raw = {
        "pr": report.pr,
        "li": report.li,
        "gi": report.gi,
        "n_test": report.n_test,
        "n_records": report.n_records,
        "n_found": report.n_found,
    }
    display = {
        "pr": _display(report.pr),
        "li": _display(report.li),
        "gi": _display(report.gi),
    }
    if report.link is not None:
        raw["mrr"] = report.link.mrr
        display["mrr"] = _display(report.link.mrr)
        for k in HITS_KS:
            raw[f"hits@{k}"] = report.link.hits[k]
            display[f"hits@{k}"] = _display(report.link.hits[k])
    out = {"display": display, "raw": raw}
    if kg is not None:
        rows = []
        for d in report.details:
            h, r, t = d["query"]
            row = {
                "head": kg.entity_name(h),
                "relation": kg.relation_name(r),
                "tail": kg.entity_name(t),
                "found": bool(d["found"]),
            }
            if "best_path" in d:
                row["best_path"] = path_to_record(kg, d["best_path"])
            if "benchmark_score" in d:
                row["benchmark_score"] = d["benchmark_score"]
            rows.append(row)
        out["details"] = rows
    return out


def write_report(f: IO[str], report: EvaluationReport, kg: KnowledgeGraph | None = None) -> None:
    json.dump(report_dict(report, kg), f, ensure_ascii=False, sort_keys=True, indent=2)
    f.write("\n")
