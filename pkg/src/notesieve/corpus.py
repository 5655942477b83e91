"""Domain data model, JSON-Lines ingestion, synthetic corpus generation, and stats.

Timestamps are integer epoch seconds (UTC) throughout; all record files are
JSON-Lines with one record kind per file plus a manifest.json declaring the
category registries.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from random import Random
from typing import Iterable


class CorpusError(ValueError):
    """Invalid corpus data: parse failures, integrity or ordering violations."""


# ---------------------------------------------------------------------------
# Record types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    patient_id: str
    creation_time: int
    service: str
    note_type: str
    text: str


@dataclass(frozen=True)
class WritingSnapshot:
    visit_id: str
    writer_id: str
    writer_role: str
    time: int
    text: str


@dataclass(frozen=True)
class ReadEvent:
    visit_id: str
    doc_id: str
    reader_id: str
    time: int


@dataclass(frozen=True)
class EDVisit:
    visit_id: str
    patient_id: str
    start_time: int
    end_time: int
    chief_complaints: tuple[str, ...]


@dataclass(frozen=True)
class Registries:
    """Closed category lists; list order defines one-hot layout downstream."""

    services: tuple[str, ...]
    note_types: tuple[str, ...]
    chief_complaints: tuple[str, ...]
    roles: tuple[str, ...]


@dataclass(frozen=True)
class Corpus:
    documents: dict[str, SourceDocument]
    visits: dict[str, EDVisit]
    snapshots: dict[str, tuple[WritingSnapshot, ...]]      # visit_id -> time-ordered
    read_events: dict[str, tuple[ReadEvent, ...]]          # visit_id -> time-ordered
    registries: Registries
    # generator sidecar: (visit_id, session_index) -> truly-relevant doc ids
    ground_truth: dict[tuple[str, int], tuple[str, ...]] = field(default_factory=dict)

    def docs_for_patient(self, patient_id: str) -> list[SourceDocument]:
        return sorted(
            (d for d in self.documents.values() if d.patient_id == patient_id),
            key=lambda d: (d.creation_time, d.doc_id),
        )


# ---------------------------------------------------------------------------
# Loading / writing
# ---------------------------------------------------------------------------

_FILES = {
    "documents": "documents.jsonl",
    "visits": "visits.jsonl",
    "snapshots": "snapshots.jsonl",
    "read_events": "read_events.jsonl",
}


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path.name}:{lineno}: parse error: {exc}") from exc
    return records


def load_corpus(corpus_dir: str | Path) -> Corpus:
    """Load and validate a corpus directory written by write_corpus/the CLI."""
    d = Path(corpus_dir)
    manifest_path = d / "manifest.json"
    if not manifest_path.exists():
        raise CorpusError(f"missing manifest.json in {d}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    registries = Registries(
        services=tuple(manifest["services"]),
        note_types=tuple(manifest["note_types"]),
        chief_complaints=tuple(manifest["chief_complaints"]),
        roles=tuple(manifest["roles"]),
    )

    raw = {}
    for kind, fname in _FILES.items():
        path = d / fname
        if not path.exists():
            raise CorpusError(f"missing {fname} in {d}")
        raw[kind] = _read_jsonl(path)

    documents: dict[str, SourceDocument] = {}
    for rec in raw["documents"]:
        doc = SourceDocument(
            doc_id=rec["doc_id"], patient_id=rec["patient_id"],
            creation_time=int(rec["creation_time"]),
            service=rec["service"], note_type=rec["note_type"], text=rec["text"],
        )
        if doc.doc_id in documents:
            raise CorpusError(f"duplicate doc_id {doc.doc_id!r}")
        documents[doc.doc_id] = doc

    visits: dict[str, EDVisit] = {}
    for rec in raw["visits"]:
        visit = EDVisit(
            visit_id=rec["visit_id"], patient_id=rec["patient_id"],
            start_time=int(rec["start_time"]), end_time=int(rec["end_time"]),
            chief_complaints=tuple(rec["chief_complaints"]),
        )
        if visit.visit_id in visits:
            raise CorpusError(f"duplicate visit_id {visit.visit_id!r}")
        visits[visit.visit_id] = visit

    snapshots: dict[str, list[WritingSnapshot]] = {}
    for rec in raw["snapshots"]:
        snap = WritingSnapshot(
            visit_id=rec["visit_id"], writer_id=rec["writer_id"],
            writer_role=rec["writer_role"], time=int(rec["time"]), text=rec["text"],
        )
        snapshots.setdefault(snap.visit_id, []).append(snap)

    read_events: dict[str, list[ReadEvent]] = {}
    for rec in raw["read_events"]:
        ev = ReadEvent(
            visit_id=rec["visit_id"], doc_id=rec["doc_id"],
            reader_id=rec["reader_id"], time=int(rec["time"]),
        )
        read_events.setdefault(ev.visit_id, []).append(ev)

    ground_truth: dict[tuple[str, int], tuple[str, ...]] = {}
    gt_path = d / "ground_truth.jsonl"
    if gt_path.exists():
        for rec in _read_jsonl(gt_path):
            key = (rec["visit_id"], int(rec["session_index"]))
            ground_truth[key] = tuple(rec["relevant_doc_ids"])

    corpus = Corpus(
        documents=documents,
        visits=visits,
        snapshots={v: tuple(sorted(s, key=lambda x: x.time)) for v, s in snapshots.items()},
        read_events={v: tuple(sorted(e, key=lambda x: (x.time, x.doc_id))) for v, e in read_events.items()},
        registries=registries,
        ground_truth=ground_truth,
    )
    validate_corpus(corpus)
    return corpus


def validate_corpus(corpus: Corpus) -> None:
    """Check referential integrity, time windows, ordering, and registries."""
    reg = corpus.registries
    for doc in corpus.documents.values():
        if doc.service not in reg.services:
            raise CorpusError(f"doc {doc.doc_id}: unregistered service {doc.service!r}")
        if doc.note_type not in reg.note_types:
            raise CorpusError(f"doc {doc.doc_id}: unregistered note_type {doc.note_type!r}")

    for visit in corpus.visits.values():
        if not visit.start_time < visit.end_time:
            raise CorpusError(f"visit {visit.visit_id}: start_time >= end_time")
        if not visit.chief_complaints:
            raise CorpusError(f"visit {visit.visit_id}: empty chief_complaints")
        if len(set(visit.chief_complaints)) != len(visit.chief_complaints):
            raise CorpusError(f"visit {visit.visit_id}: duplicate chief complaints")

    for visit_id, snaps in corpus.snapshots.items():
        if visit_id not in corpus.visits:
            raise CorpusError(f"snapshot references unknown visit_id {visit_id!r}")
        visit = corpus.visits[visit_id]
        prev = None
        for snap in snaps:
            if snap.writer_role not in reg.roles:
                raise CorpusError(f"visit {visit_id}: unregistered role {snap.writer_role!r}")
            if not (visit.start_time <= snap.time <= visit.end_time):
                raise CorpusError(
                    f"visit {visit_id}: snapshot at {snap.time} outside visit window"
                )
            if prev is not None and snap.time <= prev:
                raise CorpusError(f"visit {visit_id}: snapshot times not strictly increasing")
            prev = snap.time

    for visit_id, events in corpus.read_events.items():
        if visit_id not in corpus.visits:
            raise CorpusError(f"read event references unknown visit_id {visit_id!r}")
        visit = corpus.visits[visit_id]
        for ev in events:
            doc = corpus.documents.get(ev.doc_id)
            if doc is None:
                raise CorpusError(
                    f"visit {visit_id}: read event references unknown doc_id {ev.doc_id!r}"
                )
            if doc.patient_id != visit.patient_id:
                raise CorpusError(
                    f"visit {visit_id}: read event doc {ev.doc_id} belongs to another patient"
                )
            if not (visit.start_time <= ev.time <= visit.end_time):
                raise CorpusError(f"visit {visit_id}: read event at {ev.time} outside visit window")


def write_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    """Serialize a corpus as deterministic JSON-Lines files plus manifest."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)

    def dump(path: Path, records: Iterable[dict]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")

    dump(d / "documents.jsonl",
         (asdict(corpus.documents[k]) for k in sorted(corpus.documents)))
    dump(d / "visits.jsonl",
         ({**asdict(corpus.visits[k]), "chief_complaints": list(corpus.visits[k].chief_complaints)}
          for k in sorted(corpus.visits)))
    dump(d / "snapshots.jsonl",
         (asdict(s) for v in sorted(corpus.snapshots) for s in corpus.snapshots[v]))
    dump(d / "read_events.jsonl",
         (asdict(e) for v in sorted(corpus.read_events) for e in corpus.read_events[v]))
    manifest = {
        "services": list(corpus.registries.services),
        "note_types": list(corpus.registries.note_types),
        "chief_complaints": list(corpus.registries.chief_complaints),
        "roles": list(corpus.registries.roles),
    }
    (d / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    if corpus.ground_truth:
        dump(d / "ground_truth.jsonl",
             ({"visit_id": v, "session_index": i, "relevant_doc_ids": list(ids)}
              for (v, i), ids in sorted(corpus.ground_truth.items())))


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    n_patients: int = 100
    visits_per_patient: int = 1
    mean_sessions_per_visit: float = 7.4
    mean_docs_read_per_visit: float = 8.0
    mean_written_words: float = 229.0
    fraction_read_and_write_sessions: float = 0.14
    history_depth_min: int = 40
    history_depth_max: int = 120
    copy_rate: float = 0.5
    weight_recency: float = 7.0
    weight_repetition: float = 2.5
    weight_lexical: float = 4.0
    weight_service: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        rates = {
            "copy_rate": self.copy_rate,
            "fraction_read_and_write_sessions": self.fraction_read_and_write_sessions,
        }
        for name, value in rates.items():
            if not 0.0 <= value <= 1.0:
                raise CorpusError(f"{name} must lie in [0, 1], got {value}")
        means = {
            "mean_sessions_per_visit": self.mean_sessions_per_visit,
            "mean_docs_read_per_visit": self.mean_docs_read_per_visit,
            "mean_written_words": self.mean_written_words,
        }
        for name, value in means.items():
            if value <= 0:
                raise CorpusError(f"{name} must be positive, got {value}")
        if self.n_patients < 1 or self.visits_per_patient < 1:
            raise CorpusError("n_patients and visits_per_patient must be >= 1")
        if not 1 <= self.history_depth_min <= self.history_depth_max:
            raise CorpusError("invalid history depth bounds")

    @classmethod
    def from_json(cls, path: str | Path) -> "GeneratorConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = cls(**data)
        cfg.validate()
        return cfg


_SERVICES = (
    "oncology", "cardiology", "orthopedics", "psychiatry", "neurology",
    "nephrology", "primary care", "radiology", "surgery", "hospital medicine",
    "infectious diseases", "nursing",
)

_NOTE_TYPES = (
    "progress note", "initial note", "telephone", "letter",
    "consult", "discharge summary", "procedure note", "nursing note",
)

_ROLES = ("student", "resident", "attending")

# chief complaint -> service it tends to pull reads from
_CHIEF_COMPLAINTS = {
    "chest pain": "cardiology", "palpitations": "cardiology",
    "hip pain": "orthopedics", "knee pain": "orthopedics", "back pain": "orthopedics",
    "psychiatric evaluation": "psychiatry", "anxiety": "psychiatry",
    "headache": "neurology", "seizure": "neurology", "weakness": "neurology",
    "abdominal pain": "primary care", "fever": "infectious diseases",
    "transfer": "hospital medicine", "lethargy": "oncology",
    "shortness of breath": "cardiology", "flank pain": "nephrology",
    "wound check": "surgery", "fall": "orthopedics",
    "gastrostomy tube evaluation": "radiology", "dizziness": "neurology",
}

# topic tokens per service; relevant docs share these with written text
_SERVICE_TOPICS = {
    "oncology": ("chemo", "tumor", "staging", "metastatic", "biopsy"),
    "cardiology": ("ekg", "troponin", "stent", "afib", "ischemia"),
    "orthopedics": ("fracture", "joint", "cast", "weightbearing", "reduction"),
    "psychiatry": ("mood", "psychosis", "sertraline", "ideation", "affect"),
    "neurology": ("stroke", "eeg", "migraine", "neuropathy", "tremor"),
    "nephrology": ("creatinine", "dialysis", "gfr", "proteinuria", "renal"),
    "primary care": ("screening", "vaccination", "bp", "a1c", "refill"),
    "radiology": ("ct", "mri", "contrast", "impression", "xray"),
    "surgery": ("incision", "postop", "suture", "drain", "anastomosis"),
    "hospital medicine": ("rounding", "telemetry", "discharge", "disposition", "admit"),
    "infectious diseases": ("cultures", "antibiotics", "sepsis", "vancomycin", "fever"),
    "nursing": ("vitals", "intake", "ambulating", "prn", "repositioned"),
}

# clinical filler used in source documents
_DOC_TOKENS = (
    "patient", "history", "denies", "reports", "stable", "exam", "normal",
    "bilateral", "tenderness", "medication", "dose", "daily", "continue",
    "follow", "clinic", "labs", "pending", "improved", "chronic", "acute",
    "presenting", "symptoms", "reviewed", "discussed", "plan", "assessment",
    "hpi", "ros", "pmh", "alert", "oriented", "afebrile", "pain", "left",
    "right", "noted", "without", "significant", "prior", "status", "tolerating",
)

# structural markers that show up in feature-importance tables
_STRUCTURAL_TOKENS = ("md", "dr", "ed", "signed", "cosigned", "[DATE]", "[NAME]",
                      "subjective", "objective", "addendum")

# planted markers: inserted into truly-relevant documents at elevated rate
_SALIENT_TOKENS = ("consult", "imaging", "evaluation")

# writer-side filler, disjoint from document pools
_WRITER_TOKENS = (
    "will", "monitor", "ordered", "awaiting", "team", "updated", "family",
    "bedside", "repeat", "overnight", "morning", "currently", "recommend",
    "started", "holding", "given", "requested", "spoke", "notified", "observed",
    "likely", "possible", "secondary", "workup", "admitted", "course",
    "tolerated", "remains", "comfortable", "resting",
)

# shared between documents and writing: produces baseline lexical overlap
_COMMON_TOKENS = ("patient", "pain", "history", "stable", "plan", "exam",
                  "acute", "reviewed", "labs", "continue")

_VISIT_EPOCH = 1672531200  # 2023-01-01T00:00:00Z
_DAY = 86400


def _poisson(rng: Random, lam: float) -> int:
    # Knuth's method; lambdas here are small
    limit = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def _doc_text(rng: Random, service: str, hot: bool) -> str:
    n = rng.randint(60, 140)
    topics = _SERVICE_TOPICS[service]
    tokens: list[str] = []
    for _ in range(n):
        u = rng.random()
        if u < 0.18:
            tokens.append(rng.choice(_COMMON_TOKENS))
        elif u < 0.38:
            tokens.append(rng.choice(topics))
        elif u < 0.50:
            tokens.append(rng.choice(_STRUCTURAL_TOKENS))
        else:
            tokens.append(rng.choice(_DOC_TOKENS))
    if hot:
        # plant salient markers so bag-of-words carries genuine signal
        for _ in range(max(3, n // 20)):
            tokens.insert(rng.randrange(len(tokens) + 1), rng.choice(_SALIENT_TOKENS))
    return " ".join(tokens)


def _filler_tokens(rng: Random, n: int, focus_service: str) -> list[str]:
    topics = _SERVICE_TOPICS[focus_service]
    out = []
    for _ in range(n):
        u = rng.random()
        if u < 0.05:
            out.append(rng.choice(_COMMON_TOKENS))
        elif u < 0.12:
            out.append(rng.choice(topics))
        else:
            out.append(rng.choice(_WRITER_TOKENS))
    return out


def _copy_spans(rng: Random, pool: list[str], n_tokens: int) -> list[str]:
    out: list[str] = []
    while len(out) < n_tokens and pool:
        span = rng.randint(3, 8)
        start = rng.randrange(max(1, len(pool) - span))
        out.extend(pool[start:start + span])
    return out[:n_tokens]


def generate_synthetic(config: GeneratorConfig) -> Corpus:
    """Generate a corpus with planted relevance signal; deterministic per (seed, config)."""
    config.validate()
    rng = Random(config.seed)

    registries = Registries(
        services=_SERVICES,
        note_types=_NOTE_TYPES,
        chief_complaints=tuple(sorted(_CHIEF_COMPLAINTS)),
        roles=_ROLES,
    )

    documents: dict[str, SourceDocument] = {}
    visits: dict[str, EDVisit] = {}
    snapshots: dict[str, tuple[WritingSnapshot, ...]] = {}
    read_events: dict[str, tuple[ReadEvent, ...]] = {}
    ground_truth: dict[tuple[str, int], tuple[str, ...]] = {}

    p_both = config.fraction_read_and_write_sessions
    p_read_only = (1.0 - p_both) / 2.0
    mean_reading_sessions = config.mean_sessions_per_visit * (p_both + p_read_only)
    # the 0.67 factor compensates for cross-session re-reads when targeting
    # unique documents read per visit
    reads_per_session = config.mean_docs_read_per_visit / max(
        mean_reading_sessions * 0.67, 1e-9)
    writing_frac = p_both + (1.0 - p_both) / 2.0
    words_per_writing_session = config.mean_written_words / max(
        config.mean_sessions_per_visit * writing_frac, 1e-9)

    doc_seq = 0
    for p in range(config.n_patients):
        patient_id = f"p{p:05d}"
        complaint_names = list(sorted(_CHIEF_COMPLAINTS))
        focus_complaint = rng.choice(complaint_names)
        focus_service = _CHIEF_COMPLAINTS[focus_complaint]

        for v in range(config.visits_per_patient):
            visit_id = f"{patient_id}-v{v}"
            visit_start = (_VISIT_EPOCH + rng.randrange(60) * _DAY
                           + rng.randrange(6, 20) * 3600 + rng.randrange(3600))
            duration = rng.randint(150 * 60, 370 * 60)
            visit_end = visit_start + duration

            # --- patient history documents
            n_docs = rng.randint(config.history_depth_min, config.history_depth_max)
            ages: list[int] = []
            for _ in range(n_docs):
                # log-uniform age from 2 hours to ~6 years before visit start
                log_age = rng.uniform(math.log(2 * 3600), math.log(6 * 365 * _DAY))
                ages.append(int(math.exp(log_age)))
            ages.sort(reverse=True)
            history: list[SourceDocument] = []
            for age in ages:
                doc_id = f"d{doc_seq:06d}"
                doc_seq += 1
                if rng.random() < 0.45:
                    service = focus_service
                else:
                    service = rng.choice(_SERVICES)
                note_type = rng.choice(_NOTE_TYPES)
                # recent and focus-service docs are relevance-prone ("hot")
                hot = rng.random() < (0.7 if service == focus_service else 0.15)
                doc = SourceDocument(
                    doc_id=doc_id, patient_id=patient_id,
                    creation_time=visit_start - age,
                    service=service, note_type=note_type,
                    text=_doc_text(rng, service, hot),
                )
                history.append(doc)
                documents[doc_id] = doc

            complaints = [focus_complaint]
            if rng.random() < 0.25:
                extra = rng.choice(complaint_names)
                if extra != focus_complaint:
                    complaints.append(extra)
            visits[visit_id] = EDVisit(
                visit_id=visit_id, patient_id=patient_id,
                start_time=visit_start, end_time=visit_end,
                chief_complaints=tuple(complaints),
            )

            # --- session plan
            n_sessions = max(2, _poisson(rng, config.mean_sessions_per_visit))
            bounds = sorted(rng.sample(range(1, duration), n_sessions))
            snap_times = [visit_start + b for b in bounds]

            writer_id = f"u{p:05d}w"
            writer_role = rng.choice(_ROLES)
            reader_ids = [writer_id, f"u{p:05d}r"]

            note_tokens: list[str] = []
            visit_snaps: list[WritingSnapshot] = []
            visit_reads: list[ReadEvent] = []
            prior_reads: dict[str, int] = {}
            hot_ids = {d.doc_id for d in history if _SALIENT_TOKENS[0] in d.text.split()
                       or _SALIENT_TOKENS[1] in d.text.split()
                       or _SALIENT_TOKENS[2] in d.text.split()}

            for i in range(1, n_sessions + 1):
                sess_start = visit_start if i == 1 else snap_times[i - 2]
                sess_end = snap_times[i - 1]
                u = rng.random()
                if u < p_both:
                    kind = "both"
                elif u < p_both + p_read_only:
                    kind = "read"
                else:
                    kind = "write"

                # occasionally a new document lands mid-visit
                if rng.random() < 0.08 and sess_end - sess_start > 120:
                    doc_id = f"d{doc_seq:06d}"
                    doc_seq += 1
                    service = focus_service if rng.random() < 0.6 else rng.choice(_SERVICES)
                    doc = SourceDocument(
                        doc_id=doc_id, patient_id=patient_id,
                        creation_time=rng.randrange(sess_start + 1, sess_end),
                        service=service, note_type=rng.choice(_NOTE_TYPES),
                        text=_doc_text(rng, service, True),
                    )
                    documents[doc_id] = doc
                    history.append(doc)
                    hot_ids.add(doc_id)

                available = [d for d in history if d.creation_time < sess_start]
                session_read_tokens: list[str] = []
                relevant_ids: list[str] = []

                if kind in ("both", "read") and available:
                    by_recency = sorted(available,
                                        key=lambda d: (-d.creation_time, d.doc_id))
                    rank_of = {d.doc_id: r + 1 for r, d in enumerate(by_recency)}
                    scores = []
                    for doc in available:
                        s = (config.weight_recency * math.exp(-(rank_of[doc.doc_id] - 1) / 3.0)
                             + config.weight_repetition * min(prior_reads.get(doc.doc_id, 0), 3)
                             + config.weight_lexical * (1.0 if doc.doc_id in hot_ids else 0.0)
                             + config.weight_service * (1.0 if doc.service == focus_service else 0.0))
                        scores.append(math.exp(s))
                    n_reads = min(len(available), 1 + _poisson(rng, max(reads_per_session - 1, 0.1)))
                    chosen: list[SourceDocument] = []
                    pool = list(zip(available, scores))
                    for _ in range(n_reads):
                        total = sum(w for _, w in pool)
                        x = rng.random() * total
                        acc = 0.0
                        for j, (doc, w) in enumerate(pool):
                            acc += w
                            if x <= acc:
                                chosen.append(doc)
                                pool.pop(j)
                                break
                    relevant_ids = [d.doc_id for d in chosen]
                    for doc in chosen:
                        # relevant docs are read with high probability
                        if rng.random() < 0.92:
                            t = rng.randrange(sess_start, sess_end)
                            visit_reads.append(ReadEvent(
                                visit_id=visit_id, doc_id=doc.doc_id,
                                reader_id=rng.choice(reader_ids), time=t))
                            prior_reads[doc.doc_id] = prior_reads.get(doc.doc_id, 0) + 1
                            session_read_tokens.extend(doc.text.split())
                    # occasional stray read outside the relevant set
                    if rng.random() < 0.05 and pool:
                        doc = rng.choice(pool)[0]
                        t = rng.randrange(sess_start, sess_end)
                        visit_reads.append(ReadEvent(
                            visit_id=visit_id, doc_id=doc.doc_id,
                            reader_id=rng.choice(reader_ids), time=t))
                        prior_reads[doc.doc_id] = prior_reads.get(doc.doc_id, 0) + 1
                        session_read_tokens.extend(doc.text.split())

                if kind in ("both", "write"):
                    n_new = max(5, _poisson(rng, words_per_writing_session))
                    if kind == "both" and session_read_tokens:
                        n_copy = round(config.copy_rate * n_new)
                        new_tokens = _copy_spans(rng, session_read_tokens, n_copy)
                        new_tokens += _filler_tokens(rng, n_new - len(new_tokens), focus_service)
                    else:
                        new_tokens = _filler_tokens(rng, n_new, focus_service)
                    note_tokens.extend(new_tokens)

                if relevant_ids:
                    ground_truth[(visit_id, i)] = tuple(sorted(relevant_ids))

                visit_snaps.append(WritingSnapshot(
                    visit_id=visit_id, writer_id=writer_id, writer_role=writer_role,
                    time=sess_end, text=" ".join(note_tokens)))

            snapshots[visit_id] = tuple(visit_snaps)
            read_events[visit_id] = tuple(sorted(visit_reads, key=lambda e: (e.time, e.doc_id)))

    corpus = Corpus(
        documents=documents, visits=visits, snapshots=snapshots,
        read_events=read_events, registries=registries, ground_truth=ground_truth,
    )
    validate_corpus(corpus)
    return corpus


# ---------------------------------------------------------------------------
# Stats
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StatsReport:
    n_patients: int
    n_visits: int
    n_documents: int
    sessions_per_visit: float | None
    unique_docs_read_per_visit: float | None
    final_note_words: float | None
    fraction_read_write_sessions: float | None
    median_read_write_duration_s: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def corpus_stats(corpus: Corpus) -> StatsReport:
    """Corpus-level summary over sessionized visits; absent stats are None."""
    from .sessionizer import segment_sessions  # deferred: avoids import cycle

    if not corpus.visits:
        return StatsReport(0, 0, len(corpus.documents), None, None, None, None, None)

    session_counts: list[int] = []
    docs_read: list[int] = []
    final_words: list[int] = []
    rw_flags: list[bool] = []
    rw_durations: list[int] = []

    for visit_id, visit in corpus.visits.items():
        snaps = corpus.snapshots.get(visit_id, ())
        events = corpus.read_events.get(visit_id, ())
        sset = segment_sessions(corpus, visit, snaps, events)
        session_counts.append(len(sset.sessions))
        docs_read.append(len({e.doc_id for e in events}))
        if snaps:
            final_words.append(len(snaps[-1].text.split()))
        for sess in sset.sessions:
            rw = bool(sess.read_doc_ids) and bool(sess.new_written_text)
            rw_flags.append(rw)
            if rw:
                rw_durations.append(sess.end_time - sess.start_time)

    return StatsReport(
        n_patients=len({v.patient_id for v in corpus.visits.values()}),
        n_visits=len(corpus.visits),
        n_documents=len(corpus.documents),
        sessions_per_visit=statistics.mean(session_counts) if session_counts else None,
        unique_docs_read_per_visit=statistics.mean(docs_read) if docs_read else None,
        final_note_words=statistics.mean(final_words) if final_words else None,
        fraction_read_write_sessions=(sum(rw_flags) / len(rw_flags)) if rw_flags else None,
        median_read_write_duration_s=statistics.median(rw_durations) if rw_durations else None,
    )
