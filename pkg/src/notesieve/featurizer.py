"""Assemble sparse example vectors per (session, candidate document):
one-hot patient/clinician blocks, bucketed metadata, and two bag-of-words
blocks; dataset construction, recency ablation, and block projection."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, Registries
from .sessionizer import (Session, SessionSet, read_repetition_counts,
                          segment_sessions, filter_information_seeking)
from .textfeat import SparseVector, Vocabulary, bow_encode, tokenize

_HOUR = 3600
_DAY = 86400

TIME_DIFF_NAMES = ("time_diff_24hr", "time_diff_1wk", "time_diff_1mo",
                   "time_diff_1yr", "time_diff_5yr", "time_diff_more5yr")
RECENCY_NAMES = ("recency_1", "recency_3", "recency_5", "recency_10", "recency_more10")
READ_REP_NAMES = ("read_before_0", "read_before_1", "read_before_2_3",
                  "read_before_4_5", "read_before_more5")

BLOCK_ORDER = ("chief_complaint", "writer_role", "time_diff", "recency",
               "read_repetition", "service", "note_type", "source_bow", "written_bow")

PAPER_WIDTHS = {
    "chief_complaint": 100, "writer_role": 3, "time_diff": 6, "recency": 5,
    "read_repetition": 5, "service": 80, "note_type": 15,
    "source_bow": 21000, "written_bow": 17775,
}


def bucket_time_diff(seconds: int) -> int:
    """Category 1..6 for (session start - doc creation); half-open buckets,
    end-inclusive: (0,24h], (24h,1wk], (1wk,1mo], (1mo,1yr], (1yr,5yr], (5yr,inf).
    1 month = 30 days, 1 year = 365 days."""
    if seconds <= 0:
        raise ValueError("time difference must be positive (availability violation)")
    if seconds <= 24 * _HOUR:
        return 1
    if seconds <= 7 * _DAY:
        return 2
    if seconds <= 30 * _DAY:
        return 3
    if seconds <= 365 * _DAY:
        return 4
    if seconds <= 5 * 365 * _DAY:
        return 5
    return 6


def bucket_recency(rank: int) -> int:
    """Category 1..5 for recency rank (1 = newest): {1},{2,3},{4,5},{6..10},{>10}."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if rank == 1:
        return 1
    if rank <= 3:
        return 2
    if rank <= 5:
        return 3
    if rank <= 10:
        return 4
    return 5


def bucket_read_repetition(count: int) -> int:
    """Category 1..5 for prior read count: {0},{1},{2,3},{4,5},{>5}."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return 1
    if count == 1:
        return 2
    if count <= 3:
        return 3
    if count <= 5:
        return 4
    return 5


@dataclass(frozen=True)
class FeatureBlock:
    name: str
    offset: int
    width: int


@dataclass(frozen=True)
class FeatureSchema:
    blocks: tuple[FeatureBlock, ...]
    source_vocab_fingerprint: str = ""
    written_vocab_fingerprint: str = ""
    feature_names: tuple[str, ...] = ()

    @property
    def total_dim(self) -> int:
        last = self.blocks[-1]
        return last.offset + last.width

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for b in self.blocks:
            h.update(f"{b.name}:{b.offset}:{b.width};".encode())
        h.update(self.source_vocab_fingerprint.encode())
        h.update(self.written_vocab_fingerprint.encode())
        return h.hexdigest()[:16]

    def block(self, name: str) -> FeatureBlock:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def block_names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.blocks)

    def feature_name(self, index: int) -> str:
        if self.feature_names:
            return self.feature_names[index]
        for b in self.blocks:
            if b.offset <= index < b.offset + b.width:
                return f"{b.name}_{index - b.offset}"
        raise IndexError(index)

    @classmethod
    def build(cls, widths: dict[str, int] | None = None,
              source_vocab_fingerprint: str = "",
              written_vocab_fingerprint: str = "",
              feature_names: Sequence[str] = ()) -> "FeatureSchema":
        w = dict(PAPER_WIDTHS)
        if widths:
            w.update(widths)
        blocks = []
        offset = 0
        for name in BLOCK_ORDER:
            blocks.append(FeatureBlock(name, offset, w[name]))
            offset += w[name]
        return cls(tuple(blocks), source_vocab_fingerprint,
                   written_vocab_fingerprint, tuple(feature_names))

    @classmethod
    def paper_default(cls) -> "FeatureSchema":
        return cls.build()

    @classmethod
    def for_corpus(cls, registries: Registries, source_vocab: Vocabulary,
                   written_vocab: Vocabulary,
                   source_dims: int | None = None,
                   written_dims: int | None = None) -> "FeatureSchema":
        """Schema sized from the manifest registries and built vocabularies.

        source_dims/written_dims can pad (or cap) the BoW blocks, e.g. to pin
        the headline total dimension for schema tests.
        """
        widths = {
            "chief_complaint": len(registries.chief_complaints),
            "writer_role": len(registries.roles),
            "service": len(registries.services),
            "note_type": len(registries.note_types),
            "source_bow": source_dims if source_dims is not None else len(source_vocab),
            "written_bow": written_dims if written_dims is not None else len(written_vocab),
        }
        names: list[str] = []
        names.extend(registries.chief_complaints)
        names.extend(f"role_{r}" for r in registries.roles)
        names.extend(TIME_DIFF_NAMES)
        names.extend(RECENCY_NAMES)
        names.extend(READ_REP_NAMES)
        names.extend(f"{s}_serv" for s in registries.services)
        names.extend(f"{t}_nt" for t in registries.note_types)

        def vocab_names(vocab: Vocabulary, width: int, suffix: str, block: str) -> list[str]:
            out = []
            for g, _ in sorted(vocab.index.items(), key=lambda kv: kv[1]):
                term = g if isinstance(g, str) else " ".join(g)
                out.append(f"{term}_{suffix}")
            out = out[:width]
            out += [f"{block}_pad{i}" for i in range(width - len(out))]
            return out

        names.extend(vocab_names(source_vocab, widths["source_bow"], "s", "source_bow"))
        names.extend(vocab_names(written_vocab, widths["written_bow"], "w", "written_bow"))
        return cls.build(widths, source_vocab.fingerprint, written_vocab.fingerprint,
                         tuple(names))

    def to_json(self, path: str | Path) -> None:
        data = {
            "blocks": [{"name": b.name, "offset": b.offset, "width": b.width}
                       for b in self.blocks],
            "total_dim": self.total_dim,
            "source_vocab_fingerprint": self.source_vocab_fingerprint,
            "written_vocab_fingerprint": self.written_vocab_fingerprint,
            "fingerprint": self.fingerprint,
            "feature_names": list(self.feature_names),
        }
        Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, path: str | Path) -> "FeatureSchema":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        schema = cls(
            tuple(FeatureBlock(b["name"], b["offset"], b["width"]) for b in data["blocks"]),
            data["source_vocab_fingerprint"], data["written_vocab_fingerprint"],
            tuple(data.get("feature_names", ())),
        )
        if schema.fingerprint != data["fingerprint"]:
            raise ValueError("schema fingerprint mismatch")
        return schema


@dataclass(frozen=True)
class Example:
    x: SparseVector
    y: int
    patient_id: str
    visit_id: str
    session_index: int
    doc_id: str
    recency_rank: int  # raw rank among available docs, 1 = newest

    @property
    def key(self) -> tuple[str, str, int, str]:
        return (self.patient_id, self.visit_id, self.session_index, self.doc_id)


@dataclass(frozen=True)
class ExampleSet:
    examples: tuple[Example, ...]
    schema: FeatureSchema
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def n_positive(self) -> int:
        return sum(e.y for e in self.examples)

    def patient_ids(self) -> list[str]:
        return sorted({e.patient_id for e in self.examples})


def recency_ranks(corpus: Corpus, session: Session) -> dict[str, int]:
    """Rank available docs newest-first; creation-time ties break by doc_id."""
    docs = [corpus.documents[d] for d in session.available_doc_ids]
    docs.sort(key=lambda d: (-d.creation_time, d.doc_id))
    return {d.doc_id: r + 1 for r, d in enumerate(docs)}


def build_example(corpus: Corpus, session: Session, doc_id: str,
                  rep_counts: dict[tuple[int, str], int],
                  source_vocab: Vocabulary, written_vocab: Vocabulary,
                  schema: FeatureSchema,
                  ranks: dict[str, int] | None = None) -> Example:
    """Assemble one example for a (session, available document) pair."""
    if doc_id not in session.available_doc_ids:
        raise ValueError(f"doc {doc_id} not available in session {session.index}")
    doc = corpus.documents[doc_id]
    visit = corpus.visits[session.visit_id]
    reg = corpus.registries
    if ranks is None:
        ranks = recency_ranks(corpus, session)

    active: list[int] = []

    b = schema.block("chief_complaint")
    for cc in visit.chief_complaints:
        try:
            i = reg.chief_complaints.index(cc)
        except ValueError:
            continue  # unregistered complaints legally produce a zero block
        if i < b.width:
            active.append(b.offset + i)

    b = schema.block("writer_role")
    i = reg.roles.index(session.writer_role)
    if i < b.width:
        active.append(b.offset + i)

    b = schema.block("time_diff")
    active.append(b.offset + bucket_time_diff(session.start_time - doc.creation_time) - 1)

    rank = ranks[doc_id]
    b = schema.block("recency")
    active.append(b.offset + bucket_recency(rank) - 1)

    b = schema.block("read_repetition")
    count = rep_counts.get((session.index, doc_id), 0)
    active.append(b.offset + bucket_read_repetition(count) - 1)

    b = schema.block("service")
    try:
        i = reg.services.index(doc.service)
        if i < b.width:
            active.append(b.offset + i)
    except ValueError:
        pass

    b = schema.block("note_type")
    try:
        i = reg.note_types.index(doc.note_type)
        if i < b.width:
            active.append(b.offset + i)
    except ValueError:
        pass

    b = schema.block("source_bow")
    for i in bow_encode(tokenize(doc.text), source_vocab).indices:
        if i < b.width:
            active.append(b.offset + i)

    # the writing context at prediction time is the prior snapshot's full text
    b = schema.block("written_bow")
    for i in bow_encode(tokenize(session.prior_written_text), written_vocab).indices:
        if i < b.width:
            active.append(b.offset + i)

    return Example(
        x=SparseVector(schema.total_dim, tuple(sorted(set(active)))),
        y=session.labels[doc_id],
        patient_id=visit.patient_id, visit_id=session.visit_id,
        session_index=session.index, doc_id=doc_id,
        recency_rank=rank,
    )


def build_dataset(corpus: Corpus, session_sets: dict[str, SessionSet],
                  source_vocab: Vocabulary, written_vocab: Vocabulary,
                  schema: FeatureSchema,
                  rep_counts_by_visit: dict[str, dict[tuple[int, str], int]] | None = None,
                  ) -> ExampleSet:
    """One example per (filtered session, available doc), ordered by key.

    Read-repetition counts come from the unfiltered per-visit timeline; they
    are recomputed here when not supplied.
    """
    if rep_counts_by_visit is None:
        rep_counts_by_visit = {}
        for visit_id in session_sets:
            visit = corpus.visits[visit_id]
            unfiltered = segment_sessions(
                corpus, visit, corpus.snapshots.get(visit_id, ()),
                corpus.read_events.get(visit_id, ()))
            rep_counts_by_visit[visit_id] = read_repetition_counts(unfiltered)

    examples: list[Example] = []
    for visit_id in sorted(session_sets):
        sset = session_sets[visit_id]
        rep_counts = rep_counts_by_visit[visit_id]
        for sess in sset.sessions:
            ranks = recency_ranks(corpus, sess)
            for doc_id in sorted(sess.available_doc_ids):
                examples.append(build_example(
                    corpus, sess, doc_id, rep_counts,
                    source_vocab, written_vocab, schema, ranks=ranks))
    examples.sort(key=lambda e: e.key)
    return ExampleSet(
        examples=tuple(examples), schema=schema,
        provenance={
            "source_vocab": source_vocab.fingerprint,
            "written_vocab": written_vocab.fingerprint,
            "filtered": all(s.filtered for s in session_sets.values()),
        },
    )


def ablate_recent(example_set: ExampleSet, cutoff: int = 5) -> ExampleSet:
    """Drop examples whose document is within the most recent `cutoff` notes."""
    kept = tuple(e for e in example_set.examples if e.recency_rank > cutoff)
    prov = dict(example_set.provenance)
    prov["ablate_recent_cutoff"] = cutoff
    return ExampleSet(kept, example_set.schema, prov)


def project_features(example_set: ExampleSet, block_names: Sequence[str]) -> ExampleSet:
    """Zero all blocks outside the selection; schema and indices unchanged."""
    schema = example_set.schema
    known = set(schema.block_names())
    for name in block_names:
        if name not in known:
            raise KeyError(f"unknown block {name!r}")
    keep_ranges = [(schema.block(n).offset, schema.block(n).offset + schema.block(n).width)
                   for n in block_names]

    def keep(i: int) -> bool:
        return any(lo <= i < hi for lo, hi in keep_ranges)

    projected = tuple(
        replace(e, x=SparseVector(e.x.dimension, tuple(i for i in e.x.indices if keep(i))))
        for e in example_set.examples)
    prov = dict(example_set.provenance)
    prov["projected_blocks"] = sorted(block_names)
    return ExampleSet(projected, schema, prov)


# ---------------------------------------------------------------------------
# Binary example-set serialization (length-prefixed sparse records)
# ---------------------------------------------------------------------------
#
# File layout: 8-byte magic "NSEXSET1", then one record per example:
#   uint32 little-endian payload length, then payload = UTF-8 JSON object with
#   fields {patient_id, visit_id, session_index, doc_id, y, recency_rank,
#   indices}. A trailing record with length 0 terminates the stream, followed
#   by a JSON footer holding the schema fingerprint and provenance.

_MAGIC = b"NSEXSET1"


def write_examples(example_set: ExampleSet, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        for e in example_set.examples:
            payload = json.dumps({
                "patient_id": e.patient_id, "visit_id": e.visit_id,
                "session_index": e.session_index, "doc_id": e.doc_id,
                "y": e.y, "recency_rank": e.recency_rank,
                "indices": list(e.x.indices),
            }, sort_keys=True).encode("utf-8")
            fh.write(struct.pack("<I", len(payload)))
            fh.write(payload)
        fh.write(struct.pack("<I", 0))
        footer = json.dumps({
            "schema_fingerprint": example_set.schema.fingerprint,
            "total_dim": example_set.schema.total_dim,
            "provenance": example_set.provenance,
        }, sort_keys=True).encode("utf-8")
        fh.write(footer)


def read_examples(path: str | Path, schema: FeatureSchema) -> ExampleSet:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError("not a notesieve example file")
        examples = []
        while True:
            raw = fh.read(4)
            if len(raw) < 4:
                raise ValueError("truncated example file")
            (length,) = struct.unpack("<I", raw)
            if length == 0:
                break
            rec = json.loads(fh.read(length).decode("utf-8"))
            examples.append(Example(
                x=SparseVector(schema.total_dim, tuple(rec["indices"])),
                y=rec["y"], patient_id=rec["patient_id"], visit_id=rec["visit_id"],
                session_index=rec["session_index"], doc_id=rec["doc_id"],
                recency_rank=rec["recency_rank"],
            ))
        footer = json.loads(fh.read().decode("utf-8"))
    if footer["schema_fingerprint"] != schema.fingerprint:
        raise ValueError("example file does not match schema fingerprint")
    return ExampleSet(tuple(examples), schema, footer.get("provenance", {}))
