"""Annotation service: dispenses path-grading tasks, records judgments,
aggregates labels.

Two protocols share the store. a_benchmark tasks need ten judgments and
complete with the mean grade; golden tasks need three and complete with
the majority class when at least two agree, otherwise they are discarded.

Persistence is a newline-delimited append-only event log; recovery
replays it (optionally from a periodic snapshot). Aggregation is a pure
fold over judgments, so a replayed store reproduces every label.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .errors import ConflictError, NotFoundError, ValidationError

logger = logging.getLogger(__name__)

PROTOCOL_A = "a_benchmark"
PROTOCOL_GOLDEN = "golden"
PROTOCOLS = (PROTOCOL_A, PROTOCOL_GOLDEN)
REQUIRED_BY_PROTOCOL = {PROTOCOL_A: 10, PROTOCOL_GOLDEN: 3}

GRADE_VALUES = (0.0, 0.5, 1.0)
GRADE_CLASSES = {0.0: "unreasonable", 0.5: "partial", 1.0: "reasonable"}

STATUS_PENDING = "pending"
STATUS_COMPLETE = "complete"
STATUS_DISCARDED = "discarded"


def _validate_path_payload(path: Mapping[str, Any]) -> dict:
    try:
        nodes = list(path["nodes"])
        edges = list(path["edges"])
        head_relation = path["head_relation"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"task path payload missing field: {exc}") from exc
    if len(edges) < 1 or len(nodes) != len(edges) + 1:
        raise ValidationError("task path payload needs n+1 nodes for n edges, n >= 1")
    if not all(isinstance(x, str) and x for x in nodes + edges) or not head_relation:
        raise ValidationError("task path payload labels must be non-empty strings")
    return {"nodes": nodes, "edges": edges, "head_relation": str(head_relation)}


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    protocol: str
    path: dict  # {"nodes": [...], "edges": [...], "head_relation": str}
    required_annotators: int
    rule: dict | None = None  # {"head": str, "body": [str...]}
    model: str | None = None  # golden provenance; never shown to annotators

    @classmethod
    def from_payload(cls, rec: Mapping[str, Any]) -> "AnnotationTask":
        task_id = rec.get("task_id")
        if not task_id or not isinstance(task_id, str):
            raise ValidationError("task_id must be a non-empty string")
        protocol = rec.get("protocol")
        if protocol not in PROTOCOLS:
            raise ValidationError(f"protocol must be one of {PROTOCOLS}")
        required = int(rec.get("required_annotators", REQUIRED_BY_PROTOCOL[protocol]))
        if protocol == PROTOCOL_GOLDEN and required != 3:
            raise ValidationError("golden tasks take exactly three annotators")
        if required < 1:
            raise ValidationError("required_annotators must be positive")
        path = _validate_path_payload(rec.get("path") or {})
        rule = rec.get("rule")
        if rule is not None:
            if not isinstance(rule, Mapping) or "head" not in rule or "body" not in rule:
                raise ValidationError("task rule needs head and body")
            rule = {"head": rule["head"], "body": list(rule["body"])}
        model = rec.get("model")
        return cls(
            task_id=task_id,
            protocol=protocol,
            path=path,
            required_annotators=required,
            rule=rule,
            model=model,
        )

    def to_record(self) -> dict:
        return {
            "task_id": self.task_id,
            "protocol": self.protocol,
            "path": self.path,
            "required_annotators": self.required_annotators,
            "rule": self.rule,
            "model": self.model,
        }

    def annotator_payload(self) -> dict:
        """What an annotator may see: the path only, no protocol, no model."""
        return {"task_id": self.task_id, "path": self.path}


@dataclass
class AggregatedLabel:
    task_id: str
    status: str
    value: float | str | None
    n_judgments: int

    def to_record(self) -> dict:
        return {
            "task_id": self.task_id,
            "status": self.status,
            "value": self.value,
            "n_judgments": self.n_judgments,
        }


def aggregate(task: AnnotationTask, grades: Mapping[str, float]) -> AggregatedLabel:
    """Fold a task's judgments into its current label."""
    n = len(grades)
    if task.protocol == PROTOCOL_A:
        if n >= task.required_annotators:
            value = sum(grades.values()) / n
            return AggregatedLabel(task.task_id, STATUS_COMPLETE, value, n)
        return AggregatedLabel(task.task_id, STATUS_PENDING, None, n)
    # golden: 3 judgments, majority of >= 2 wins, three-way split discarded
    if n < task.required_annotators:
        return AggregatedLabel(task.task_id, STATUS_PENDING, None, n)
    counts: dict[float, int] = {}
    for g in grades.values():
        counts[g] = counts.get(g, 0) + 1
    top_grade, top_count = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    if top_count >= 2:
        return AggregatedLabel(task.task_id, STATUS_COMPLETE, GRADE_CLASSES[top_grade], n)
    return AggregatedLabel(task.task_id, STATUS_DISCARDED, None, n)


class AnnotationStore:
    """In-memory state fed by an append-only event log.

    Every mutation validates against current state, then appends one event
    and applies it; replaying the log rebuilds identical state. A snapshot
    (written every snapshot_every events) records how many log events it
    covers, so recovery is snapshot + tail replay. The log itself is never
    rewritten.
    """

    def __init__(
        self,
        log_path: str | os.PathLike | None = None,
        seed: int = 0,
        snapshot_every: int = 0,
    ) -> None:
        self._lock = threading.Lock()
        self._tasks: dict[str, AnnotationTask] = {}
        self._order: list[str] = []
        self._grades: dict[str, dict[str, float]] = {}
        self._rng = random.Random(f"{seed}:next-task")
        self._log_path = os.fspath(log_path) if log_path is not None else None
        self._snapshot_every = snapshot_every
        self._n_events = 0
        self._log_file = None
        if self._log_path is not None:
            self._recover()
            self._log_file = open(self._log_path, "a", encoding="utf-8")

    # ---- persistence ----

    @property
    def _snapshot_path(self) -> str:
        return f"{self._log_path}.snapshot.json"

    def _recover(self) -> None:
        start = 0
        if os.path.exists(self._snapshot_path):
            with open(self._snapshot_path, encoding="utf-8") as f:
                snap = json.load(f)
            for rec in snap["tasks"]:
                task = AnnotationTask.from_payload(rec)
                self._tasks[task.task_id] = task
                self._order.append(task.task_id)
                self._grades[task.task_id] = {}
            for j in snap["judgments"]:
                self._grades[j["task_id"]][j["annotator_id"]] = float(j["grade"])
            start = int(snap["events_applied"])
            self._n_events = start
        if not os.path.exists(self._log_path):
            return
        with open(self._log_path, encoding="utf-8") as f:
            for i, line in enumerate(f):
                if i < start or not line.strip():
                    continue
                self._apply(json.loads(line))
                self._n_events += 1
        logger.info(
            "recovered %d tasks, %d judgments from %s",
            len(self._tasks),
            sum(len(g) for g in self._grades.values()),
            self._log_path,
        )

    def _apply(self, event: Mapping[str, Any]) -> None:
        if event["event"] == "task":
            task = AnnotationTask.from_payload(event["task"])
            self._tasks[task.task_id] = task
            self._order.append(task.task_id)
            self._grades[task.task_id] = {}
        elif event["event"] == "judgment":
            self._grades[event["task_id"]][event["annotator_id"]] = float(event["grade"])
        else:
            raise ValidationError(f"unknown event kind {event['event']!r}")

    def _append(self, events: Iterable[Mapping[str, Any]]) -> None:
        events = list(events)
        if self._log_file is not None:
            for e in events:
                self._log_file.write(json.dumps(e, ensure_ascii=False, sort_keys=True) + "\n")
            self._log_file.flush()
            os.fsync(self._log_file.fileno())
        for e in events:
            self._apply(e)
        self._n_events += len(events)
        if (
            self._log_file is not None
            and self._snapshot_every > 0
            and self._n_events // self._snapshot_every
            > (self._n_events - len(events)) // self._snapshot_every
        ):
            self._write_snapshot()

    def _write_snapshot(self) -> None:
        snap = {
            "events_applied": self._n_events,
            "tasks": [self._tasks[tid].to_record() for tid in self._order],
            "judgments": [
                {"task_id": tid, "annotator_id": a, "grade": g}
                for tid in self._order
                for a, g in sorted(self._grades[tid].items())
            ],
        }
        tmp = f"{self._snapshot_path}.tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(snap, f, ensure_ascii=False, sort_keys=True)
        os.replace(tmp, self._snapshot_path)

    def close(self) -> None:
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None

    # ---- operations ----

    def create_tasks(self, payloads: Iterable[Mapping[str, Any]]) -> int:
        tasks = [AnnotationTask.from_payload(p) for p in payloads]
        with self._lock:
            batch_ids = set()
            for t in tasks:
                if t.task_id in self._tasks or t.task_id in batch_ids:
                    raise ConflictError(f"duplicate task_id {t.task_id!r}")
                batch_ids.add(t.task_id)
            self._append({"event": "task", "task": t.to_record()} for t in tasks)
        return len(tasks)

    def _label_unlocked(self, task_id: str) -> AggregatedLabel:
        return aggregate(self._tasks[task_id], self._grades[task_id])

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        if not annotator_id:
            raise ValidationError("annotator id must be non-empty")
        with self._lock:
            eligible = [
                tid
                for tid in self._order
                if annotator_id not in self._grades[tid]
                and self._label_unlocked(tid).status == STATUS_PENDING
            ]
            if not eligible:
                return None
            return self._tasks[self._rng.choice(eligible)]

    def submit_judgment(
        self, task_id: str, annotator_id: str, grade: float
    ) -> AggregatedLabel:
        if not annotator_id:
            raise ValidationError("annotator id must be non-empty")
        if (
            isinstance(grade, bool)
            or not isinstance(grade, (int, float))
            or float(grade) not in GRADE_VALUES
        ):
            raise ValidationError(f"grade must be one of {GRADE_VALUES}")
        grade = float(grade)
        with self._lock:
            if task_id not in self._tasks:
                raise NotFoundError(f"unknown task {task_id!r}")
            if annotator_id in self._grades[task_id]:
                raise ConflictError(f"annotator {annotator_id!r} already judged {task_id!r}")
            if self._label_unlocked(task_id).status != STATUS_PENDING:
                raise ConflictError(f"task {task_id!r} is no longer pending")
            self._append([
                {
                    "event": "judgment",
                    "task_id": task_id,
                    "annotator_id": annotator_id,
                    "grade": grade,
                    "timestamp": time.time(),
                }
            ])
            return self._label_unlocked(task_id)

    def label(self, task_id: str) -> AggregatedLabel:
        with self._lock:
            if task_id not in self._tasks:
                raise NotFoundError(f"unknown task {task_id!r}")
            return self._label_unlocked(task_id)

    def export_labels(
        self, protocol: str, include_discarded: bool = False
    ) -> list[dict]:
        if protocol not in PROTOCOLS:
            raise ValidationError(f"protocol must be one of {PROTOCOLS}")
        with self._lock:
            out = []
            for tid in sorted(self._order):
                task = self._tasks[tid]
                if task.protocol != protocol:
                    continue
                lbl = self._label_unlocked(tid)
                if lbl.status == STATUS_COMPLETE or (
                    include_discarded and lbl.status == STATUS_DISCARDED
                ):
                    rec = lbl.to_record()
                    rec["protocol"] = task.protocol
                    rec["rule"] = task.rule
                    rec["model"] = task.model
                    out.append(rec)
            return out

    def progress(self) -> dict:
        with self._lock:
            counts = {
                p: {STATUS_PENDING: 0, STATUS_COMPLETE: 0, STATUS_DISCARDED: 0}
                for p in PROTOCOLS
            }
            n_judgments = 0
            for tid in self._order:
                task = self._tasks[tid]
                counts[task.protocol][self._label_unlocked(tid).status] += 1
                n_judgments += len(self._grades[tid])
            return {
                "tasks": counts,
                "n_tasks": len(self._order),
                "n_judgments": n_judgments,
            }


def create_app(store: AnnotationStore) -> FastAPI:
    """HTTP facade over an AnnotationStore."""
    app = FastAPI(title="path annotation service")
    # the annotator web UI is served from a different origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _http(exc: Exception) -> HTTPException:
        if isinstance(exc, NotFoundError):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, ConflictError):
            return HTTPException(status_code=409, detail=str(exc))
        return HTTPException(status_code=400, detail=str(exc))

    @app.post("/tasks")
    async def post_tasks(request: Request):
        body = await request.json()
        payloads = body.get("tasks", body) if isinstance(body, dict) else body
        if not isinstance(payloads, list):
            raise HTTPException(status_code=400, detail="expected a task list")
        try:
            created = store.create_tasks(payloads)
        except (ValidationError, ConflictError, NotFoundError) as exc:
            raise _http(exc) from exc
        return {"created": created}

    @app.get("/tasks/next")
    def get_next(annotator: str = Query(min_length=1)):
        task = store.next_task(annotator)
        return {"task": None if task is None else task.annotator_payload()}

    @app.post("/judgments")
    async def post_judgment(request: Request):
        body = await request.json()
        try:
            task_id = body["task_id"]
            annotator = body.get("annotator_id") or body.get("annotator")
            grade = body["grade"]
            if annotator is None:
                raise ValidationError("annotator_id required")
            label = store.submit_judgment(task_id, annotator, grade)
        except (KeyError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"bad judgment: {exc}") from exc
        except (ValidationError, ConflictError, NotFoundError) as exc:
            raise _http(exc) from exc
        return label.to_record()

    @app.get("/labels")
    def get_labels(protocol: str, include_discarded: bool = False):
        try:
            rows = store.export_labels(protocol, include_discarded=include_discarded)
        except ValidationError as exc:
            raise _http(exc) from exc
        body = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows)
        return PlainTextResponse(body, media_type="application/x-ndjson")

    @app.get("/progress")
    def get_progress():
        return store.progress()

    return app
