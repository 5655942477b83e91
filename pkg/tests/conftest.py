import pytest

from notesieve.corpus import (Corpus, EDVisit, GeneratorConfig, ReadEvent,
                              Registries, SourceDocument, WritingSnapshot,
                              generate_synthetic)

# 2023-01-01 10:00:00 UTC; the walkthrough fixture uses minute offsets from here
T0 = 1672567200


def minute(m: float) -> int:
    return T0 + int(m * 60)


REGISTRIES = Registries(
    services=("oncology", "surgery", "radiology"),
    note_types=("progress note", "initial note", "telephone"),
    chief_complaints=("abdominal pain", "fever"),
    roles=("student", "resident", "attending"),
)


def make_walkthrough_corpus() -> Corpus:
    """One visit starting at 10:00 with writing snapshots at 10:05/10:10/10:15/10:20.

    Documents 1-3 predate the visit; document 2 is read at 10:02 (so session 1
    labels it positive), document 4 is created at 10:03 and read at 10:07,
    document 5 is created at 10:12 and never read. Session 3 has no reads.
    """
    docs = [
        SourceDocument("d1", "px", minute(-120), "oncology", "progress note",
                       "history reviewed chemo plan"),
        SourceDocument("d2", "px", minute(-60), "surgery", "initial note",
                       "postop exam stable incision"),
        SourceDocument("d3", "px", minute(-30), "radiology", "telephone",
                       "ct impression pending"),
        SourceDocument("d4", "px", minute(3), "surgery", "progress note",
                       "drain removed patient stable"),
        SourceDocument("d5", "px", minute(12), "oncology", "telephone",
                       "spoke with family"),
    ]
    visit = EDVisit("v1", "px", T0, minute(30), ("abdominal pain",))
    snaps = (
        WritingSnapshot("v1", "w1", "resident", minute(5), "patient stable"),
        WritingSnapshot("v1", "w1", "resident", minute(10),
                        "patient stable hpi reviewed"),
        WritingSnapshot("v1", "w1", "resident", minute(15),
                        "patient stable hpi reviewed"),
        WritingSnapshot("v1", "w1", "resident", minute(20),
                        "patient stable hpi reviewed plan discussed"),
    )
    reads = (
        ReadEvent("v1", "d2", "r1", minute(2)),
        ReadEvent("v1", "d1", "r1", minute(7)),
        ReadEvent("v1", "d4", "r1", minute(7.5)),
        ReadEvent("v1", "d3", "r2", minute(17)),
    )
    return Corpus(
        documents={d.doc_id: d for d in docs},
        visits={"v1": visit},
        snapshots={"v1": snaps},
        read_events={"v1": reads},
        registries=REGISTRIES,
    )


@pytest.fixture
def walkthrough_corpus() -> Corpus:
    return make_walkthrough_corpus()


@pytest.fixture(scope="session")
def small_corpus() -> Corpus:
    return generate_synthetic(GeneratorConfig(n_patients=15, seed=3))
