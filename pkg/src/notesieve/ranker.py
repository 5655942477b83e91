"""Top-k suggestion lists: select candidates by predicted probability, display
chronologically newest-first."""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .corpus import Corpus
from .featurizer import FeatureSchema, build_example, recency_ranks
from .model import LogisticModel
from .sessionizer import Session
from .textfeat import Vocabulary

_DAY = 86400


def relative_time(creation_time: int, reference_time: int) -> str:
    """Human-readable age of a document relative to a reference time."""
    delta = reference_time - creation_time
    if delta < _DAY:
        return "same day"
    days = delta // _DAY
    if days < 7:
        return f"{days} day{'s' if days != 1 else ''} ago"
    if days < 30:
        weeks = days // 7
        return f"{weeks} week{'s' if weeks != 1 else ''} ago"
    if days < 365:
        months = days // 30
        return f"{months} month{'s' if months != 1 else ''} ago"
    years = days // 365
    return f"{years} year{'s' if years != 1 else ''} ago"


@dataclass(frozen=True)
class SuggestionItem:
    doc_id: str
    probability: float
    creation_time: int
    service: str
    note_type: str
    relative_time: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RankedSuggestions:
    visit_id: str
    session_index: int
    k: int
    items: tuple[SuggestionItem, ...]  # chronological, newest first

    def to_dict(self) -> dict:
        return {"visit_id": self.visit_id, "session_index": self.session_index,
                "k": self.k, "items": [i.to_dict() for i in self.items]}


def rank_session(corpus: Corpus, session: Session, model: LogisticModel,
                 schema: FeatureSchema, source_vocab: Vocabulary,
                 written_vocab: Vocabulary,
                 rep_counts: dict[tuple[int, str], int] | None = None,
                 k: int = 10) -> RankedSuggestions:
    """Score every available document, select the k most probable (probability
    ties prefer newer documents), then order the selection newest-first."""
    if model.schema_fingerprint and model.schema_fingerprint != schema.fingerprint:
        raise ValueError("model/schema fingerprint mismatch")
    rep_counts = rep_counts or {}
    visit = corpus.visits[session.visit_id]
    ranks = recency_ranks(corpus, session)
    scored = []
    for doc_id in sorted(session.available_doc_ids):
        ex = build_example(corpus, session, doc_id, rep_counts,
                           source_vocab, written_vocab, schema, ranks=ranks)
        prob = model.predict_proba_sparse(ex.x)
        doc = corpus.documents[doc_id]
        scored.append((prob, doc))
    # selection: top-k by probability, ties toward newer creation, then doc_id
    scored.sort(key=lambda pd: (-pd[0], -pd[1].creation_time, pd[1].doc_id))
    selected = scored[:k]
    # display: strictly newest-first
    selected.sort(key=lambda pd: (-pd[1].creation_time, pd[1].doc_id))
    items = tuple(
        SuggestionItem(
            doc_id=doc.doc_id, probability=prob,
            creation_time=doc.creation_time, service=doc.service,
            note_type=doc.note_type,
            relative_time=relative_time(doc.creation_time, visit.start_time),
        )
        for prob, doc in selected)
    return RankedSuggestions(visit_id=session.visit_id,
                             session_index=session.index, k=k, items=items)


class LiveRanker:
    """Stateless ranking against an immutable corpus/model snapshot, with a
    monotone-timestamp guard per visit."""

    def __init__(self, corpus: Corpus, model: LogisticModel,
                 schema: FeatureSchema, source_vocab: Vocabulary,
                 written_vocab: Vocabulary):
        self.corpus = corpus
        self.model = model
        self.schema = schema
        self.source_vocab = source_vocab
        self.written_vocab = written_vocab
        self._last_ts: dict[str, int] = {}

    def rank(self, visit_id: str, written_text: str, timestamp: int,
             k: int = 10) -> RankedSuggestions:
        corpus = self.corpus
        if visit_id not in corpus.visits:
            raise KeyError(f"unknown visit {visit_id!r}")
        last = self._last_ts.get(visit_id)
        if last is not None and timestamp < last:
            raise ValueError(f"timestamp regression for visit {visit_id}")
        self._last_ts[visit_id] = timestamp
        visit = corpus.visits[visit_id]

        snaps = corpus.snapshots.get(visit_id, ())
        prior_times = [s.time for s in snaps if s.time <= timestamp]
        session_start_of_record = prior_times[-1] if prior_times else visit.start_time
        writer_role = (next((s.writer_role for s in reversed(snaps)
                             if s.time <= timestamp), None)
                       or (snaps[0].writer_role if snaps
                           else corpus.registries.roles[0]))

        available = frozenset(
            d.doc_id for d in corpus.docs_for_patient(visit.patient_id)
            if d.creation_time < timestamp)
        session_index = len(prior_times) + 1

        # reads from sessions strictly before the in-progress one
        rep: dict[str, int] = {}
        for ev in corpus.read_events.get(visit_id, ()):
            if ev.time < session_start_of_record:
                rep[ev.doc_id] = rep.get(ev.doc_id, 0) + 1
        rep_counts = {(session_index, d): c for d, c in rep.items()}

        session = Session(
            visit_id=visit_id, index=session_index,
            start_time=timestamp, end_time=timestamp + 1,
            prior_written_text=written_text, new_written_text=(),
            read_doc_ids=(), available_doc_ids=available,
            labels={d: 0 for d in available},
            writer_role=writer_role,
        )
        return rank_session(corpus, session, self.model, self.schema,
                            self.source_vocab, self.written_vocab,
                            rep_counts=rep_counts, k=k)
