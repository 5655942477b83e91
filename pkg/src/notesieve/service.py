"""HTTP service: live ranking, visit timelines, weight inspection, and
judgment persistence for the browser UI.

All state (corpus, model, vocabularies) is loaded once at startup and held
immutable; the judgment store is an append-only JSON-Lines file materialized
last-write-wins.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, asdict
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import Corpus
from .featurizer import FeatureSchema
from .model import LogisticModel, top_weights
from .ranker import LiveRanker
from .sessionizer import segment_sessions
from .textfeat import Vocabulary

JUDGMENT_LABELS = ("relevant_positive", "relevant_negative", "irrelevant_negative")


@dataclass(frozen=True)
class JudgmentRecord:
    annotator_id: str
    visit_id: str
    session_index: int
    doc_id: str
    label: str
    recorded_at: int

    @property
    def key(self) -> tuple[str, str, int, str]:
        return (self.annotator_id, self.visit_id, self.session_index, self.doc_id)


class JudgmentStore:
    """Append-only JSONL store; reads see the last write per
    (annotator, visit, session, doc)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[tuple, JudgmentRecord] = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = JudgmentRecord(**json.loads(line))
                    self._records[rec.key] = rec

    def add(self, rec: JudgmentRecord) -> None:
        if rec.label not in JUDGMENT_LABELS:
            raise ValueError(f"invalid label {rec.label!r}")
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")
            self._records[rec.key] = rec

    def all(self) -> list[JudgmentRecord]:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: r.key)

    def for_visit(self, visit_id: str) -> list[JudgmentRecord]:
        return [r for r in self.all() if r.visit_id == visit_id]


def compare_judgments(judgments: list[JudgmentRecord],
                      rankings: dict[tuple[str, int], tuple[str, ...]]) -> dict:
    """Rank of each relevant_positive judgment within the predicted top-k; the
    summary fraction counts relevant positives captured in the rankings."""
    detail = []
    captured = 0
    total_rp = 0
    for rec in judgments:
        ranked = rankings.get((rec.visit_id, rec.session_index), ())
        rank = ranked.index(rec.doc_id) + 1 if rec.doc_id in ranked else None
        if rec.label == "relevant_positive":
            total_rp += 1
            if rank is not None:
                captured += 1
        detail.append({
            "annotator_id": rec.annotator_id, "visit_id": rec.visit_id,
            "session_index": rec.session_index, "doc_id": rec.doc_id,
            "label": rec.label, "rank": rank,
        })
    return {
        "judgments": detail,
        "n_relevant_positive": total_rp,
        "captured_fraction": captured / total_rp if total_rp else None,
    }


class RankRequest(BaseModel):
    visit_id: str
    current_note_text: str = ""
    timestamp: int
    k: int = 10


class JudgmentRequest(BaseModel):
    annotator_id: str
    visit_id: str
    session_index: int
    doc_id: str
    label: str


def _error(status: int, code: str, message: str = "") -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": code, "message": message})


def create_app(corpus: Corpus, model: LogisticModel, schema: FeatureSchema,
               source_vocab: Vocabulary, written_vocab: Vocabulary,
               judgment_path: str | Path, ui_dir: str | Path | None = None,
               ) -> FastAPI:
    """Wire the service; raises on fingerprint inconsistency at startup."""
    if model.schema_fingerprint != schema.fingerprint:
        raise ValueError("model/schema fingerprint mismatch")
    if schema.source_vocab_fingerprint != source_vocab.fingerprint:
        raise ValueError("schema/source vocabulary fingerprint mismatch")
    if schema.written_vocab_fingerprint != written_vocab.fingerprint:
        raise ValueError("schema/written vocabulary fingerprint mismatch")

    app = FastAPI(title="notesieve")
    ranker = LiveRanker(corpus, model, schema, source_vocab, written_vocab)
    store = JudgmentStore(judgment_path)
    # ranking per (visit, session) served so far, for the agreement view
    served_rankings: dict[tuple[str, int], tuple[str, ...]] = {}

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "invalid_request", str(exc.errors()[:3]))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model_fingerprint": model.schema_fingerprint}

    @app.post("/rank")
    def rank(req: RankRequest):
        visit = corpus.visits.get(req.visit_id)
        if visit is None:
            return _error(404, "unknown_visit", req.visit_id)
        if req.k < 1:
            return _error(400, "invalid_k", "k must be >= 1")
        if not (visit.start_time <= req.timestamp <= visit.end_time):
            return _error(400, "timestamp_outside_visit",
                          f"timestamp must lie in [{visit.start_time}, {visit.end_time}]")
        try:
            result = ranker.rank(req.visit_id, req.current_note_text,
                                 req.timestamp, req.k)
        except ValueError as exc:
            return _error(400, "timestamp_regression", str(exc))
        served_rankings[(result.visit_id, result.session_index)] = tuple(
            item.doc_id for item in result.items)
        return result.to_dict()

    @app.get("/visits/{visit_id}/timeline")
    def timeline(visit_id: str):
        visit = corpus.visits.get(visit_id)
        if visit is None:
            return _error(404, "unknown_visit", visit_id)
        snaps = corpus.snapshots.get(visit_id, ())
        events = corpus.read_events.get(visit_id, ())
        sset = segment_sessions(corpus, visit, snaps, events)
        return {
            "visit": {
                "visit_id": visit.visit_id, "patient_id": visit.patient_id,
                "start_time": visit.start_time, "end_time": visit.end_time,
                "chief_complaints": list(visit.chief_complaints),
            },
            "snapshots": [{"time": s.time, "writer_id": s.writer_id,
                           "writer_role": s.writer_role, "text": s.text}
                          for s in snaps],
            "read_events": [{"doc_id": e.doc_id, "reader_id": e.reader_id,
                             "time": e.time} for e in events],
            "sessions": [{"index": s.index, "start_time": s.start_time,
                          "end_time": s.end_time,
                          "n_reads": len(s.read_doc_ids),
                          "available_count": len(s.available_doc_ids),
                          "positive_doc_ids": sorted(s.positive_doc_ids)}
                         for s in sset.sessions],
            "documents": [{"doc_id": d.doc_id, "creation_time": d.creation_time,
                           "service": d.service, "note_type": d.note_type}
                          for d in corpus.docs_for_patient(visit.patient_id)],
        }

    @app.get("/model/weights")
    def weights(n: int = Query(10, ge=1), sign: str = Query("+")):
        if sign not in ("+", "-"):
            return _error(400, "invalid_sign", "sign must be '+' or '-'")
        return {"sign": sign,
                "weights": [{"feature": f, "weight": w}
                            for f, w in top_weights(model, schema, n, sign)]}

    @app.post("/judgments")
    def post_judgment(req: JudgmentRequest):
        if req.label not in JUDGMENT_LABELS:
            return _error(400, "invalid_label",
                          f"label must be one of {JUDGMENT_LABELS}")
        if req.visit_id not in corpus.visits:
            return _error(404, "unknown_visit", req.visit_id)
        rec = JudgmentRecord(
            annotator_id=req.annotator_id, visit_id=req.visit_id,
            session_index=req.session_index, doc_id=req.doc_id,
            label=req.label, recorded_at=int(time.time()))
        store.add(rec)
        return asdict(rec)

    @app.get("/judgments")
    def get_judgments(visit_id: str | None = None):
        recs = store.for_visit(visit_id) if visit_id else store.all()
        return {"judgments": [asdict(r) for r in recs]}

    @app.get("/judgments/agreement")
    def agreement(visit_id: str | None = None):
        recs = store.for_visit(visit_id) if visit_id else store.all()
        return compare_judgments(recs, served_rankings)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
