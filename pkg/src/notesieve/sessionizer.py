"""Turn a visit's snapshots and read events into labeled sessions.

Session i (1-based) spans [time of snapshot i-1, time of snapshot i); session 1
is the dummy-initial session starting at the visit start. Intervals are
half-open, so a read at exactly a snapshot time belongs to the following
session. A document is available for a session iff it was created strictly
before the session start.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, CorpusError, EDVisit, ReadEvent, WritingSnapshot
from .textfeat import tokenize


@dataclass(frozen=True)
class Session:
    visit_id: str
    index: int
    start_time: int
    end_time: int
    prior_written_text: str
    new_written_text: tuple[str, ...]          # token diff vs previous snapshot
    read_doc_ids: tuple[tuple[str, int], ...]  # (doc_id, read time), time order
    available_doc_ids: frozenset[str]
    labels: dict[str, int]                     # doc_id -> {0, 1} over available docs
    writer_role: str                           # role on the snapshot ending this session

    @property
    def positive_doc_ids(self) -> frozenset[str]:
        return frozenset(d for d, y in self.labels.items() if y == 1)


@dataclass(frozen=True)
class SessionSet:
    visit_id: str
    sessions: tuple[Session, ...]
    filtered: bool = False
    dropped_read_events: tuple[ReadEvent, ...] = ()
    warnings: tuple[str, ...] = ()


def lcs_table(a: list, b: list) -> list[list[int]]:
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        ai = a[i - 1]
        row, prev = dp[i], dp[i - 1]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = row[j - 1] if row[j - 1] >= prev[j] else prev[j]
    return dp


def _unmatched_in_b(a: list[str], b: list[str]) -> list[str]:
    """Tokens of b not matched by an LCS alignment against a, in order."""
    # trim common prefix/suffix first; snapshots are mostly append-only
    lo = 0
    while lo < len(a) and lo < len(b) and a[lo] == b[lo]:
        lo += 1
    hi = 0
    while (hi < len(a) - lo and hi < len(b) - lo
           and a[len(a) - 1 - hi] == b[len(b) - 1 - hi]):
        hi += 1
    a_mid = a[lo:len(a) - hi]
    b_mid = b[lo:len(b) - hi]
    if not a_mid:
        return list(b_mid)
    dp = lcs_table(a_mid, b_mid)
    out: list[str] = []
    i, j = len(a_mid), len(b_mid)
    while j > 0:
        if i > 0 and a_mid[i - 1] == b_mid[j - 1] and dp[i][j] == dp[i - 1][j - 1] + 1:
            i -= 1
            j -= 1
        elif dp[i][j] == dp[i][j - 1]:
            out.append(b_mid[j - 1])
            j -= 1
        else:
            i -= 1
    out.reverse()
    return out


def new_text_diff(prev_text: str, curr_text: str) -> list[str]:
    """Tokens of curr_text not matched by an LCS alignment against prev_text."""
    return _unmatched_in_b(tokenize(prev_text), tokenize(curr_text))


def segment_sessions(corpus: Corpus, visit: EDVisit,
                     snapshots: tuple[WritingSnapshot, ...],
                     read_events: tuple[ReadEvent, ...]) -> SessionSet:
    """Build the unfiltered session set for one visit."""
    if not snapshots:
        return SessionSet(visit_id=visit.visit_id, sessions=(),
                          warnings=("no snapshots: empty session set",))
    times = [s.time for s in snapshots]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise CorpusError(f"visit {visit.visit_id}: snapshots out of order")

    patient_docs = corpus.docs_for_patient(visit.patient_id)

    sessions: list[Session] = []
    dropped: list[ReadEvent] = []
    boundaries = [visit.start_time] + times
    events = sorted(read_events, key=lambda e: (e.time, e.doc_id))

    # assign each event to the half-open interval containing it
    per_session: dict[int, list[ReadEvent]] = {}
    for ev in events:
        if ev.time < visit.start_time or ev.time >= times[-1]:
            dropped.append(ev)
            continue
        # find i with boundaries[i-1] <= t < boundaries[i]
        for i in range(1, len(boundaries)):
            if boundaries[i - 1] <= ev.time < boundaries[i]:
                per_session.setdefault(i, []).append(ev)
                break

    prev_text = ""
    for i in range(1, len(snapshots) + 1):
        start = boundaries[i - 1]
        end = boundaries[i]
        available = frozenset(
            d.doc_id for d in patient_docs if d.creation_time < start)
        sess_events = per_session.get(i, [])
        labels = {doc_id: 0 for doc_id in available}
        reads = []
        for ev in sess_events:
            reads.append((ev.doc_id, ev.time))
            if ev.doc_id in available:
                labels[ev.doc_id] = 1
        curr_text = snapshots[i - 1].text
        sessions.append(Session(
            visit_id=visit.visit_id, index=i, start_time=start, end_time=end,
            prior_written_text=prev_text,
            new_written_text=tuple(new_text_diff(prev_text, curr_text)),
            read_doc_ids=tuple(reads),
            available_doc_ids=available,
            labels=labels,
            writer_role=snapshots[i - 1].writer_role,
        ))
        prev_text = curr_text

    return SessionSet(visit_id=visit.visit_id, sessions=tuple(sessions),
                      dropped_read_events=tuple(dropped))


def filter_information_seeking(session_set: SessionSet) -> SessionSet:
    """Keep only sessions with at least one positive label; order preserved."""
    kept = tuple(s for s in session_set.sessions if s.positive_doc_ids)
    return SessionSet(visit_id=session_set.visit_id, sessions=kept, filtered=True,
                      dropped_read_events=session_set.dropped_read_events,
                      warnings=session_set.warnings)


def read_repetition_counts(session_set: SessionSet) -> dict[tuple[int, str], int]:
    """(session index, doc_id) -> number of reads in strictly earlier sessions.

    Counts raw openings on the unfiltered timeline; two reads of a doc within
    one session contribute 2 toward later sessions.
    """
    counts: dict[tuple[int, str], int] = {}
    cumulative: dict[str, int] = {}
    for sess in sorted(session_set.sessions, key=lambda s: s.index):
        for doc_id in sess.available_doc_ids:
            counts[(sess.index, doc_id)] = cumulative.get(doc_id, 0)
        for doc_id, _t in sess.read_doc_ids:
            cumulative[doc_id] = cumulative.get(doc_id, 0) + 1
    return counts


def sessionize_corpus(corpus: Corpus, keep_all: bool = False) -> dict[str, SessionSet]:
    """Segment every visit; filtered to information-seeking sessions by default."""
    out = {}
    for visit_id in sorted(corpus.visits):
        visit = corpus.visits[visit_id]
        sset = segment_sessions(
            corpus, visit,
            corpus.snapshots.get(visit_id, ()),
            corpus.read_events.get(visit_id, ()))
        out[visit_id] = sset if keep_all else filter_information_seeking(sset)
    return out
