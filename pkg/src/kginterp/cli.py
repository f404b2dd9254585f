"""Command-line pipeline: every stage reads and writes plain artifact
files (TSV/JSONL/JSON), so stages can be re-run and diffed.

Exit codes: 0 success, 2 usage or missing input (click), 3 schema or
validation failure (a machine-readable JSON error report goes to stderr).
Configuration may come from a JSON file (--config); explicit flags win.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path as FsPath

import click

from . import annotation as ann
from . import benchmark as bmk
from . import evaluate as ev
from . import kg as kgm
from . import paths as pm
from . import rules as rm
from .errors import KGInterpError, ParseError, ValidationError

logger = logging.getLogger("kginterp")


def _fail(exc: KGInterpError) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    line = getattr(exc, "line_no", None)
    if line is not None:
        payload["line"] = line
    click.echo(json.dumps(payload, ensure_ascii=False, sort_keys=True), err=True)
    sys.exit(3)


def pipeline_command(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except KGInterpError as exc:
            _fail(exc)

    return wrapper


def _read_config(ctx: click.Context, param: click.Parameter, value: str | None):
    if not value:
        return None
    with open(value, encoding="utf-8") as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise click.BadParameter("config must be a JSON object")
    flat = {
        k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)
    }
    default_map: dict = {}
    for name in main.commands:
        default_map[name] = dict(flat)
    for k, v in cfg.items():
        if isinstance(v, dict):
            default_map.setdefault(k, {}).update(
                {kk.replace("-", "_"): vv for kk, vv in v.items()}
            )
    ctx.default_map = default_map
    return value


@click.group()
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_read_config,
    is_eager=True,
    expose_value=False,
    help="JSON file with default option values; explicit flags override it.",
)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Interpretability evaluation pipeline for KG reasoning models."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


# ---- shared options --------------------------------------------------

_in_path = click.Path(exists=True, dir_okay=False)


def kg_options(fn):
    fn = click.option("--kg", "kg_file", type=_in_path, default=None,
                      help="Single TSV dump (unsplit).")(fn)
    fn = click.option("--train", type=_in_path, default=None)(fn)
    fn = click.option("--valid", type=_in_path, default=None)(fn)
    fn = click.option("--test", type=_in_path, default=None)(fn)
    return fn


def _open_or_empty(path: str | None):
    if path is None:
        return iter(())
    return open(path, encoding="utf-8")


def _load_graph(kg_file, train, valid, test, augment: bool = True) -> kgm.KnowledgeGraph:
    if kg_file and train:
        raise ValidationError("pass either --kg or --train/--valid/--test, not both")
    if kg_file:
        with open(kg_file, encoding="utf-8") as f:
            graph = kgm.load_kg(f)
    elif train:
        with open(train, encoding="utf-8") as ftr:
            graph = kgm.load_kg_splits(ftr, _open_or_empty(valid), _open_or_empty(test))
    else:
        raise ValidationError("a knowledge graph is required (--kg or --train)")
    return kgm.augment_inverses(graph) if augment else graph


def _write_tsv(path: FsPath, kg: kgm.KnowledgeGraph, arr) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for h, r, t in arr:
            f.write(f"{kg.entity_name(h)}\t{kg.relation_name(r)}\t{kg.entity_name(t)}\n")


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, ensure_ascii=False, sort_keys=True))


# ---- graph commands --------------------------------------------------


@main.command("import")
@kg_options
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Directory for normalized train/valid/test.tsv.")
@pipeline_command
def import_cmd(kg_file, train, valid, test, out):
    """Load, validate and normalize triple files."""
    graph = _load_graph(kg_file, train, valid, test, augment=False)
    out_dir = FsPath(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_tsv(out_dir / "train.tsv", graph, graph.train)
    _write_tsv(out_dir / "valid.tsv", graph, graph.valid)
    _write_tsv(out_dir / "test.tsv", graph, graph.test)
    summary = graph.describe()
    if graph.load_report:
        summary["duplicates_removed"] = graph.load_report.n_duplicates
    with open(out_dir / "kg.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    _echo_json(summary)


@main.command("split")
@kg_options
@click.option("--ratios", default="0.9,0.05,0.05", show_default=True,
              help="train,valid,test fractions; must sum to 1.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@pipeline_command
def split_cmd(kg_file, train, valid, test, ratios, seed, out):
    """Shuffle all triples and repartition them deterministically."""
    graph = _load_graph(kg_file, train, valid, test, augment=False)
    try:
        parts = tuple(float(x) for x in ratios.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad --ratios value {ratios!r}") from exc
    if len(parts) != 3:
        raise ValidationError("--ratios needs exactly three fractions")
    graph = kgm.split_kg(graph, ratios=parts, seed=seed)
    out_dir = FsPath(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_tsv(out_dir / "train.tsv", graph, graph.train)
    _write_tsv(out_dir / "valid.tsv", graph, graph.valid)
    _write_tsv(out_dir / "test.tsv", graph, graph.test)
    _echo_json(graph.describe())


# ---- path and rule commands ------------------------------------------


@main.command("enumerate-paths")
@kg_options
@click.option("--max-hops", default=3, show_default=True)
@click.option("--backend", type=click.Choice(["numba", "numpy"]), default=None,
              help="Kernel backend (default: numba when available).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def enumerate_paths_cmd(kg_file, train, valid, test, max_hops, backend, out):
    """Enumerate bounded walks for every test triple."""
    graph = _load_graph(kg_file, train, valid, test)
    if graph.test.shape[0] == 0:
        raise ValidationError("no test triples to enumerate paths for")
    queries = [(int(h), int(r), int(t)) for h, r, t in graph.test]
    collected = pm.collect_all_paths(graph, queries, max_hops=max_hops, backend=backend)
    with open(out, "w", encoding="utf-8") as f:
        n = pm.write_path_sets(f, graph, collected.by_query.values())
    _echo_json({
        "queries": n,
        "paths": collected.total_paths,
        "failures": len(collected.failures),
    })


@main.command("abstract")
@click.option("--paths", "paths_file", type=_in_path, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def abstract_cmd(paths_file, out):
    """Abstract enumerated paths into deduplicated rules with path counts."""
    counts: dict[tuple[str, tuple[str, ...]], int] = {}
    with open(paths_file, encoding="utf-8") as f:
        for no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                head = rec["relation"]
                bodies = [tuple(p["relations"]) for p in rec["paths"]]
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ParseError(f"bad path record: {exc}", no) from exc
            for body in bodies:
                if not body:
                    raise ParseError("empty path in record", no)
                key = (head, body)
                counts[key] = counts.get(key, 0) + 1
    with open(out, "w", encoding="utf-8") as f:
        for (head, body), n in counts.items():
            f.write(json.dumps({
                "head": head,
                "body": list(body),
                "confidence": None,
                "head_coverage": None,
                "support": 0,
                "body_count": 0,
                "n_paths": n,
            }, ensure_ascii=False, sort_keys=True) + "\n")
    _echo_json({"rules": len(counts), "paths": sum(counts.values())})


@main.command("stats-rules")
@kg_options
@click.option("--rules", "rules_file", type=_in_path, required=True)
@click.option("--pair-cap", default=0, show_default=True,
              help="Sample grounding starts above this count (0 = exact).")
@click.option("--seed", default=0, show_default=True)
@click.option("--backend", type=click.Choice(["numba", "numpy"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def stats_rules_cmd(kg_file, train, valid, test, rules_file, pair_cap, seed, backend, out):
    """Compute closed-world support, body count, confidence and head coverage."""
    graph = _load_graph(kg_file, train, valid, test)
    with open(rules_file, encoding="utf-8") as f:
        rs = rm.read_ruleset(f, graph)
    rs.stats = rm.compute_stats_many(
        graph, rs.rules, pair_cap=pair_cap, seed=seed, backend=backend
    )
    with open(out, "w", encoding="utf-8") as f:
        rm.write_ruleset(f, graph, rs)
    defined = sum(1 for st in rs.stats.values() if st.confidence is not None)
    _echo_json({"rules": len(rs), "defined_confidence": defined})


@main.command("prune")
@kg_options
@click.option("--rules", "rules_file", type=_in_path, required=True,
              help="Rule file with statistics (stats-rules output).")
@click.option("--min-confidence", default=0.001, show_default=True)
@click.option("--min-hc", default=0.001, show_default=True)
@click.option("--h-threshold", default=bmk.DEFAULT_H_THRESHOLD, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output file for rules meeting both thresholds.")
@pipeline_command
def prune_cmd(kg_file, train, valid, test, rules_file, min_confidence, min_hc,
              h_threshold, out):
    """Keep rules meeting the confidence and head-coverage thresholds and
    report the H/L/O tier split of the full rule universe."""
    graph = _load_graph(kg_file, train, valid, test)
    with open(rules_file, encoding="utf-8") as f:
        universe = rm.read_ruleset(f, graph)
    for rule in universe.rules:
        if rule not in universe.stats:
            raise ValidationError("rule file lacks statistics; run stats-rules first")
    mined = rm.mine_ruleset(
        graph, universe, min_confidence=min_confidence, min_head_coverage=min_hc
    )
    with open(out, "w", encoding="utf-8") as f:
        rm.write_ruleset(f, graph, mined)
    tiers = bmk.classify_rules(universe, mined, confidence_threshold=h_threshold)
    _echo_json({
        "rules": len(universe),
        "mined": len(mined),
        "tiers": bmk.tier_report(tiers, universe.path_counts),
    })


# ---- annotation commands ----------------------------------------------


def _task_path_payload(graph: kgm.KnowledgeGraph, path: pm.Path, head_relation: int) -> dict:
    return {
        "nodes": [graph.entity_name(path.head)]
        + [graph.entity_name(e) for e in path.entities],
        "edges": [graph.relation_name(r) for r in path.relations],
        "head_relation": graph.relation_name(head_relation),
    }


@main.command("sample-annotation")
@kg_options
@click.option("--paths", "paths_file", type=_in_path, default=None,
              help="Enumerated paths (a_benchmark protocol).")
@click.option("--rules", "rules_file", type=_in_path, default=None,
              help="Mined rules with statistics (a_benchmark protocol).")
@click.option("--protocol", type=click.Choice(list(ann.PROTOCOLS)),
              default=ann.PROTOCOL_A, show_default=True)
@click.option("--predictions", "predictions_specs", multiple=True,
              metavar="NAME=FILE", help="Model prediction dumps (golden protocol).")
@click.option("--h-threshold", default=bmk.DEFAULT_H_THRESHOLD, show_default=True)
@click.option("--per-rule", default=bmk.DEFAULT_PER_RULE, show_default=True)
@click.option("--per-model", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def sample_annotation_cmd(kg_file, train, valid, test, paths_file, rules_file,
                          protocol, predictions_specs, h_threshold, per_rule,
                          per_model, seed, out):
    """Produce annotation task files ready to POST to the service."""
    graph = _load_graph(kg_file, train, valid, test)
    tasks: list[dict] = []
    if protocol == ann.PROTOCOL_A:
        if not paths_file or not rules_file:
            raise ValidationError("a_benchmark sampling needs --paths and --rules")
        with open(rules_file, encoding="utf-8") as f:
            mined = rm.read_ruleset(f, graph)
        h_rules = [
            rule for rule in mined.rules
            if (st := mined.stats.get(rule)) and st.confidence is not None
            and st.confidence >= h_threshold
        ]
        with open(paths_file, encoding="utf-8") as f:
            collected = pm.CollectedPaths(
                by_query={ps.query: ps for ps in pm.read_path_sets(f, graph)}
            )
        sampled = bmk.sample_annotation_tasks(
            collected, h_rules, per_rule=per_rule, seed=seed
        )
        i = 0
        for rule, rule_paths in sampled:
            for path in rule_paths:
                tasks.append({
                    "task_id": f"a-{i:06d}",
                    "protocol": ann.PROTOCOL_A,
                    "path": _task_path_payload(graph, path, rule.head_relation),
                    "rule": {
                        "head": graph.relation_name(rule.head_relation),
                        "body": [graph.relation_name(r) for r in rule.body],
                    },
                    "required_annotators": ann.REQUIRED_BY_PROTOCOL[ann.PROTOCOL_A],
                })
                i += 1
    else:
        if not predictions_specs:
            raise ValidationError("golden sampling needs --predictions NAME=FILE")
        records_by_model = {}
        for spec in predictions_specs:
            name, _, file = spec.partition("=")
            if not name or not file:
                raise ValidationError(f"bad --predictions value {spec!r}")
            with open(file, encoding="utf-8") as f:
                records_by_model[name] = ev.read_predictions(f, graph)
        sampled = ev.golden_sample(graph, records_by_model, per_model=per_model, seed=seed)
        for i, task in enumerate(sampled):
            tasks.append({
                "task_id": f"g-{i:06d}",
                "protocol": ann.PROTOCOL_GOLDEN,
                "path": _task_path_payload(graph, task.path, task.query[1]),
                "rule": None,
                "model": task.model,
                "required_annotators": ann.REQUIRED_BY_PROTOCOL[ann.PROTOCOL_GOLDEN],
            })
    with open(out, "w", encoding="utf-8") as f:
        for t in tasks:
            f.write(json.dumps(t, ensure_ascii=False, sort_keys=True) + "\n")
    _echo_json({"tasks": len(tasks), "protocol": protocol})


@main.command("serve-annotation")
@click.option("--log", "log_file", type=click.Path(dir_okay=False), required=True,
              help="Append-only event log (created if absent).")
@click.option("--seed", default=0, show_default=True)
@click.option("--snapshot-every", default=1000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True)
@pipeline_command
def serve_annotation_cmd(log_file, seed, snapshot_every, host, port):
    """Run the annotation HTTP service."""
    import uvicorn

    store = ann.AnnotationStore(log_file, seed=seed, snapshot_every=snapshot_every)
    app = ann.create_app(store)
    uvicorn.run(app, host=host, port=port, log_level="warning")


# ---- benchmark commands ----------------------------------------------


def _rule_from_names(graph: kgm.KnowledgeGraph, rec, where: str) -> rm.Rule:
    try:
        return rm.Rule(
            head_relation=graph.relation_id(rec["head"]),
            body=tuple(graph.relation_id(r) for r in rec["body"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{where}: rule needs head and body: {exc}") from exc


def _read_annotation_labels(path: str, graph: kgm.KnowledgeGraph):
    """Complete a_benchmark labels grouped per rule -> (scores, task counts)."""
    sums: dict[rm.Rule, float] = {}
    counts: dict[rm.Rule, int] = {}
    with open(path, encoding="utf-8") as f:
        for no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad label record: {exc}", no) from exc
            if rec.get("status") != ann.STATUS_COMPLETE:
                continue
            if rec.get("protocol", ann.PROTOCOL_A) != ann.PROTOCOL_A:
                continue
            if rec.get("rule") is None:
                raise ParseError("a_benchmark label lacks its rule", no)
            value = rec.get("value")
            if not isinstance(value, (int, float)) or not 0 <= float(value) <= 1:
                raise ParseError(f"label value {value!r} outside [0, 1]", no)
            rule = _rule_from_names(graph, rec["rule"], f"line {no}")
            sums[rule] = sums.get(rule, 0.0) + float(value)
            counts[rule] = counts.get(rule, 0) + 1
    scores = {rule: sums[rule] / counts[rule] for rule in sums}
    return scores, counts


@main.command("build-benchmark")
@kg_options
@click.option("--kind", type=click.Choice(["A", "R"]), required=True)
@click.option("--rules", "rules_file", type=_in_path, default=None,
              help="Full abstracted rule universe (kind A).")
@click.option("--mined", "mined_file", type=_in_path, required=True,
              help="Mined rules with statistics.")
@click.option("--annotations", "annotations_file", type=click.Path(dir_okay=False),
              default=None, help="Annotation label export (kind A).")
@click.option("--calibration", "calibration_file", type=_in_path, default=None,
              help="Calibration thresholds (kind R).")
@click.option("--h-threshold", default=bmk.DEFAULT_H_THRESHOLD, show_default=True)
@click.option("--l-score", default=bmk.DEFAULT_L_SCORE, show_default=True)
@click.option("--o-score", default=bmk.DEFAULT_O_SCORE, show_default=True)
@click.option("--h-fallback", default=bmk.DEFAULT_H_FALLBACK, show_default=True,
              help="Score for confident rules that were never annotated.")
@click.option("--max-hops", default=3, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def build_benchmark_cmd(kg_file, train, valid, test, kind, rules_file, mined_file,
                        annotations_file, calibration_file, h_threshold, l_score,
                        o_score, h_fallback, max_hops, out):
    """Assemble a benchmark file from annotations (A) or calibration (R)."""
    graph = _load_graph(kg_file, train, valid, test)
    with open(mined_file, encoding="utf-8") as f:
        mined = rm.read_ruleset(f, graph, provenance="mined")
    if kind == "A":
        if not annotations_file:
            raise ValidationError("kind A requires --annotations")
        if not FsPath(annotations_file).exists():
            raise ValidationError(f"annotations file not found: {annotations_file}")
        if not rules_file:
            raise ValidationError("kind A requires --rules (the full rule universe)")
        with open(rules_file, encoding="utf-8") as f:
            universe = rm.read_ruleset(f, graph)
        for rule in mined.rules:
            universe.add(rule)
        tiers = bmk.classify_rules(universe, mined, confidence_threshold=h_threshold)
        scores, task_counts = _read_annotation_labels(annotations_file, graph)
        bench = bmk.build_a_benchmark_from_scores(
            scores, tiers, path_counts=task_counts,
            l_score=l_score, o_score=o_score, h_fallback=h_fallback,
            max_hops=max_hops,
        )
    else:
        if not calibration_file:
            raise ValidationError("kind R requires --calibration")
        with open(calibration_file, encoding="utf-8") as f:
            cal_raw = json.load(f)
        try:
            cal = bmk.CalibrationResult(
                h1=float(cal_raw["h1"]),
                h2=float(cal_raw["h2"]),
                micro_f1=float(cal_raw.get("micro_f1", 0.0)),
                confusion=None,
                n_labeled=int(cal_raw.get("n_labeled", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad calibration file: {exc}") from exc
        bench = bmk.build_r_benchmark(mined, cal, max_hops=max_hops)
    with open(out, "w", encoding="utf-8") as f:
        n = bmk.write_benchmark(f, graph, bench)
    _echo_json({"kind": kind, "rules_scored": n})


@main.command("calibrate")
@kg_options
@click.option("--mined", "mined_file", type=_in_path, required=True)
@click.option("--labels", "labels_file", type=_in_path, required=True,
              help='JSONL rows {"head", "body", "label"} with 3-class labels.')
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def calibrate_cmd(kg_file, train, valid, test, mined_file, labels_file, out):
    """Fit the two confidence thresholds against golden class labels."""
    graph = _load_graph(kg_file, train, valid, test)
    with open(mined_file, encoding="utf-8") as f:
        mined = rm.read_ruleset(f, graph, provenance="mined")
    labels: dict[rm.Rule, str] = {}
    with open(labels_file, encoding="utf-8") as f:
        for no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                label = rec["label"]
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ParseError(f"bad label record: {exc}", no) from exc
            labels[_rule_from_names(graph, rec, f"line {no}")] = label
    cal = bmk.calibrate_thresholds(mined, labels)
    with open(out, "w", encoding="utf-8") as f:
        json.dump({
            "h1": cal.h1,
            "h2": cal.h2,
            "micro_f1": cal.micro_f1,
            "confusion": cal.confusion.tolist(),
            "n_labeled": cal.n_labeled,
        }, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    _echo_json({"h1": cal.h1, "h2": cal.h2, "micro_f1": cal.micro_f1})


# ---- evaluation commands ----------------------------------------------


def _known_tails(graph: kgm.KnowledgeGraph) -> dict[tuple[int, int], set[int]]:
    import numpy as np

    known: dict[tuple[int, int], set[int]] = {}
    for arr in (graph.train, graph.valid, graph.test):
        for h, r, t in np.asarray(arr):
            known.setdefault((int(h), int(r)), set()).add(int(t))
    return known


@main.command("evaluate")
@kg_options
@click.option("--benchmark", "benchmark_file", type=_in_path, required=True)
@click.option("--predictions", "predictions_file", type=_in_path, required=True)
@click.option("--max-hops", default=3, show_default=True)
@click.option("--filtered", is_flag=True,
              help="Filter other true tails out of rankings before ranking the gold.")
@click.option("--details/--no-details", default=False, show_default=True,
              help="Include per-triple rows in the report.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def evaluate_cmd(kg_file, train, valid, test, benchmark_file, predictions_file,
                 max_hops, filtered, details, out):
    """Score a model's predictions against a benchmark."""
    graph = _load_graph(kg_file, train, valid, test)
    with open(benchmark_file, encoding="utf-8") as f:
        bench = bmk.load_benchmark(f, graph, max_hops=max_hops)
    with open(predictions_file, encoding="utf-8") as f:
        records = ev.read_predictions(f, graph)
    report = ev.evaluate_model(
        bench, graph, records,
        filter_tails=_known_tails(graph) if filtered else None,
    )
    with open(out, "w", encoding="utf-8") as f:
        ev.write_report(f, report, graph if details else None)
    _echo_json(ev.report_dict(report)["display"])


@main.command("upper-bound")
@kg_options
@click.option("--benchmark", "benchmark_file", type=_in_path, required=True)
@click.option("--paths", "paths_file", type=_in_path, required=True)
@click.option("--max-hops", default=3, show_default=True)
@click.option("--details/--no-details", default=False, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def upper_bound_cmd(kg_file, train, valid, test, benchmark_file, paths_file,
                    max_hops, details, out):
    """Best achievable interpretability given the enumerated paths."""
    graph = _load_graph(kg_file, train, valid, test)
    with open(benchmark_file, encoding="utf-8") as f:
        bench = bmk.load_benchmark(f, graph, max_hops=max_hops)
    with open(paths_file, encoding="utf-8") as f:
        collected = pm.CollectedPaths(
            by_query={ps.query: ps for ps in pm.read_path_sets(f, graph)}
        )
    report = ev.upper_bound(bench, graph, collected)
    with open(out, "w", encoding="utf-8") as f:
        ev.write_report(f, report, graph if details else None)
    _echo_json(ev.report_dict(report)["display"])


@main.command("compare")
@click.option("--report", "report_specs", multiple=True, metavar="NAME=FILE",
              help="Per-model report.json produced by evaluate.")
@click.option("--golden-labels", "golden_labels_file", type=_in_path, default=None,
              help="Golden label export (service /labels?protocol=golden).")
@click.option("--golden-scores", "golden_scores_file", type=_in_path, default=None,
              help="JSON map model -> golden GI, if already computed.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def compare_cmd(report_specs, golden_labels_file, golden_scores_file, out):
    """Mean absolute GI gap between a benchmark and golden annotation."""
    if not report_specs:
        raise ValidationError("at least one --report NAME=FILE is required")
    benchmark_gi: dict[str, float] = {}
    model_pr: dict[str, float] = {}
    for spec in report_specs:
        name, _, file = spec.partition("=")
        if not name or not file:
            raise ValidationError(f"bad --report value {spec!r}")
        with open(file, encoding="utf-8") as f:
            raw = json.load(f).get("raw", {})
        if "gi" not in raw:
            raise ValidationError(f"report {file} lacks a raw.gi value")
        benchmark_gi[name] = float(raw["gi"])
        model_pr[name] = float(raw.get("pr", 0.0))

    if golden_scores_file:
        with open(golden_scores_file, encoding="utf-8") as f:
            golden_gi = {str(k): float(v) for k, v in json.load(f).items()}
    elif golden_labels_file:
        class_grade = {cls: g for g, cls in ann.GRADE_CLASSES.items()}
        graded: list[tuple[str, float]] = []
        with open(golden_labels_file, encoding="utf-8") as f:
            for no, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"bad label record: {exc}", no) from exc
                if rec.get("status") != ann.STATUS_COMPLETE:
                    continue
                if rec.get("model") is None:
                    raise ParseError("golden label lacks its model name", no)
                if rec.get("value") not in class_grade:
                    raise ParseError(f"golden value {rec.get('value')!r} unknown", no)
                graded.append((rec["model"], class_grade[rec["value"]]))
        golden_li = ev.golden_model_scores(graded)
        missing = [m for m in golden_li if m not in model_pr]
        if missing:
            logger.warning("golden labels name models without reports: %s", missing)
        golden_gi = {m: model_pr[m] * li for m, li in golden_li.items() if m in model_pr}
    else:
        raise ValidationError("compare needs --golden-labels or --golden-scores")

    diff = ev.abs_diff_avg(benchmark_gi, golden_gi)
    result = {
        "abs_diff_avg": diff,
        "benchmark_gi": benchmark_gi,
        "golden_gi": golden_gi,
    }
    with open(out, "w", encoding="utf-8") as f:
        json.dump(result, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    _echo_json({"abs_diff_avg": diff})


@main.command("report-stats")
@kg_options
@click.option("--benchmark", "benchmark_file", type=_in_path, required=True)
@click.option("--rules", "rules_file", type=_in_path, required=True,
              help="Rule universe to summarize (with stats if available).")
@click.option("--min-rules", default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@pipeline_command
def report_stats_cmd(kg_file, train, valid, test, benchmark_file, rules_file,
                     min_rules, out):
    """Descriptive statistics of a benchmark over a rule universe."""
    graph = _load_graph(kg_file, train, valid, test)
    with open(benchmark_file, encoding="utf-8") as f:
        bench = bmk.load_benchmark(f, graph)
    with open(rules_file, encoding="utf-8") as f:
        universe = rm.read_ruleset(f, graph)
    stats = bmk.benchmark_stats(bench, universe, graph, min_rules_per_relation=min_rules)
    with open(out, "w", encoding="utf-8") as f:
        json.dump(stats, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    _echo_json({"rules": stats["n_rules"], "kind": stats["kind"]})


if __name__ == "__main__":
    main()
