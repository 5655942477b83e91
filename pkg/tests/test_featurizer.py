import json

import pytest

from notesieve.featurizer import (PAPER_WIDTHS, FeatureSchema, ablate_recent,
                                  bucket_read_repetition, bucket_recency,
                                  bucket_time_diff, build_dataset,
                                  build_example, project_features,
                                  read_examples, recency_ranks, write_examples)
from notesieve.sessionizer import sessionize_corpus
from notesieve.textfeat import VocabConfig, build_vocabulary

from conftest import REGISTRIES

_HOUR = 3600
_DAY = 86400


# --- bucket boundaries ----------------------------------------------------

@pytest.mark.parametrize("seconds,expected", [
    (1, 1),
    (24 * _HOUR, 1),           # 24h is inclusive in the first bucket
    (24 * _HOUR + 1, 2),
    (7 * _DAY, 2),
    (7 * _DAY + 1, 3),
    (30 * _DAY, 3),            # 1 month = 30 days
    (30 * _DAY + 1, 4),
    (365 * _DAY, 4),           # 1 year = 365 days
    (365 * _DAY + 1, 5),
    (5 * 365 * _DAY, 5),
    (5 * 365 * _DAY + 1, 6),
    (100 * 365 * _DAY, 6),
])
def test_bucket_time_diff(seconds, expected):
    assert bucket_time_diff(seconds) == expected


@pytest.mark.parametrize("bad", [0, -5])
def test_bucket_time_diff_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        bucket_time_diff(bad)


@pytest.mark.parametrize("rank,expected", [
    (1, 1), (2, 2), (3, 2), (4, 3), (5, 3), (6, 4), (10, 4), (11, 5), (99, 5),
])
def test_bucket_recency(rank, expected):
    assert bucket_recency(rank) == expected


def test_bucket_recency_rejects_zero():
    with pytest.raises(ValueError):
        bucket_recency(0)


@pytest.mark.parametrize("count,expected", [
    (0, 1), (1, 2), (2, 3), (3, 3), (4, 4), (5, 4), (6, 5), (50, 5),
])
def test_bucket_read_repetition(count, expected):
    assert bucket_read_repetition(count) == expected


def test_bucket_read_repetition_rejects_negative():
    with pytest.raises(ValueError):
        bucket_read_repetition(-1)


# --- schema ---------------------------------------------------------------

def test_paper_default_dimension():
    schema = FeatureSchema.paper_default()
    assert schema.total_dim == 38989
    assert schema.total_dim == sum(PAPER_WIDTHS.values())


def test_block_layout():
    schema = FeatureSchema.paper_default()
    assert schema.block_names() == (
        "chief_complaint", "writer_role", "time_diff", "recency",
        "read_repetition", "service", "note_type", "source_bow", "written_bow")
    offset = 0
    for block in schema.blocks:
        assert block.offset == offset
        offset += block.width
    assert schema.block("source_bow").width == 21000
    assert schema.block("written_bow").width == 17775
    with pytest.raises(KeyError):
        schema.block("nope")


def test_schema_fingerprint_sensitivity():
    a = FeatureSchema.build()
    b = FeatureSchema.build({"source_bow": 20999})
    c = FeatureSchema.build(source_vocab_fingerprint="abcd")
    assert len({a.fingerprint, b.fingerprint, c.fingerprint}) == 3


def test_schema_round_trip(tmp_path):
    schema = FeatureSchema.build({"source_bow": 12}, "aa", "bb",
                                 feature_names=())
    path = tmp_path / "schema.json"
    schema.to_json(path)
    loaded = FeatureSchema.from_json(path)
    assert loaded == schema
    data = json.loads(path.read_text())
    data["blocks"][0]["width"] = 999
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError, match="fingerprint"):
        FeatureSchema.from_json(path)


def _vocabs(corpus):
    cfg = VocabConfig(max_unigrams=100, min_count=1, n_bigrams=0, n_trigrams=0)
    src = build_vocabulary(
        (corpus.documents[d].text for d in sorted(corpus.documents)),
        cfg, corpus_role="source")
    wr = build_vocabulary(
        [corpus.snapshots[v][-1].text for v in sorted(corpus.snapshots)],
        cfg, corpus_role="written")
    return src, wr


def test_for_corpus_feature_names(walkthrough_corpus):
    src, wr = _vocabs(walkthrough_corpus)
    schema = FeatureSchema.for_corpus(REGISTRIES, src, wr)
    names = schema.feature_names
    assert names[0] == "abdominal pain"
    assert names[2] == "role_student"
    assert schema.feature_name(schema.block("time_diff").offset) == "time_diff_24hr"
    assert schema.feature_name(schema.block("recency").offset + 1) == "recency_3"
    assert schema.feature_name(schema.block("read_repetition").offset) == "read_before_0"
    assert schema.feature_name(schema.block("service").offset + 1) == "surgery_serv"
    assert schema.feature_name(schema.block("note_type").offset) == "progress note_nt"
    assert all(n.endswith("_s") for n in
               names[schema.block("source_bow").offset:
                     schema.block("source_bow").offset + len(src)])
    assert all(n.endswith("_w") for n in
               names[schema.block("written_bow").offset:
                     schema.block("written_bow").offset + len(wr)])
    assert len(names) == schema.total_dim


def test_for_corpus_padding(walkthrough_corpus):
    src, wr = _vocabs(walkthrough_corpus)
    schema = FeatureSchema.for_corpus(REGISTRIES, src, wr,
                                      source_dims=len(src) + 4)
    assert schema.block("source_bow").width == len(src) + 4
    pad = schema.feature_name(schema.block("source_bow").offset + len(src))
    assert pad == "source_bow_pad0"


# --- examples -------------------------------------------------------------

def _dataset_parts(corpus):
    src, wr = _vocabs(corpus)
    schema = FeatureSchema.for_corpus(REGISTRIES, src, wr)
    filtered = sessionize_corpus(corpus)
    return src, wr, schema, filtered


def test_recency_ranks(walkthrough_corpus):
    sset = sessionize_corpus(walkthrough_corpus, keep_all=True)["v1"]
    ranks = recency_ranks(walkthrough_corpus, sset.sessions[0])
    # newest first: d3 (09:30), d2 (09:00), d1 (08:00)
    assert ranks == {"d3": 1, "d2": 2, "d1": 3}


def test_build_example_exact_indices(walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    sess1 = filtered["v1"].sessions[0]
    ex = build_example(walkthrough_corpus, sess1, "d2", {}, src, wr, schema)
    assert ex.y == 1
    assert ex.recency_rank == 2
    src_off = schema.block("source_bow").offset
    expected = {
        0,       # chief complaint "abdominal pain"
        2 + 1,   # role_resident
        5 + 0,   # time diff 1h -> bucket 1
        11 + 1,  # recency rank 2 -> bucket 2
        16 + 0,  # never read before -> bucket 1
        21 + 1,  # service surgery
        24 + 1,  # note type "initial note"
    }
    expected |= {src_off + src.index[t]
                 for t in ("postop", "exam", "stable", "incision")}
    # session 1 has no prior written text, so the written block is empty
    assert set(ex.x.indices) == expected


def test_build_example_written_block(walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    sess2 = filtered["v1"].sessions[1]
    assert sess2.prior_written_text == "patient stable"
    ex = build_example(walkthrough_corpus, sess2, "d1", {}, src, wr, schema)
    wr_off = schema.block("written_bow").offset
    expected_written = {wr_off + wr.index["patient"], wr_off + wr.index["stable"]}
    assert expected_written <= set(ex.x.indices)


def test_build_example_unavailable_doc_rejected(walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    sess1 = filtered["v1"].sessions[0]
    with pytest.raises(ValueError, match="not available"):
        build_example(walkthrough_corpus, sess1, "d5", {}, src, wr, schema)


def test_build_dataset(walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    ds = build_dataset(walkthrough_corpus, filtered, src, wr, schema)
    assert len(ds) == 12  # availability sizes 3 + 4 + 5
    assert ds.n_positive == 4  # d2; d1 and d4; d3
    keys = [e.key for e in ds.examples]
    assert keys == sorted(keys)
    # repetition from the unfiltered timeline: d1 read in session 2
    by_key = {e.key: e for e in ds.examples}
    rep_off = schema.block("read_repetition").offset
    e = by_key[("px", "v1", 4, "d1")]
    assert rep_off + 1 in e.x.indices  # one prior read -> bucket 2


def test_ablate_recent(walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    ds = build_dataset(walkthrough_corpus, filtered, src, wr, schema)
    kept = ablate_recent(ds, cutoff=2)
    assert all(e.recency_rank > 2 for e in kept.examples)
    assert len(kept) == 1 + 2 + 3
    assert kept.provenance["ablate_recent_cutoff"] == 2


def test_project_features(walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    ds = build_dataset(walkthrough_corpus, filtered, src, wr, schema)
    only_cc = project_features(ds, ["chief_complaint"])
    cc = schema.block("chief_complaint")
    for e in only_cc.examples:
        assert all(cc.offset <= i < cc.offset + cc.width for i in e.x.indices)
    assert only_cc.schema.total_dim == ds.schema.total_dim
    with pytest.raises(KeyError):
        project_features(ds, ["bogus"])


def test_example_serialization_round_trip(tmp_path, walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    ds = build_dataset(walkthrough_corpus, filtered, src, wr, schema)
    path = tmp_path / "examples.bin"
    write_examples(ds, path)
    loaded = read_examples(path, schema)
    assert loaded.examples == ds.examples
    assert loaded.provenance["source_vocab"] == src.fingerprint


def test_example_serialization_schema_mismatch(tmp_path, walkthrough_corpus):
    src, wr, schema, filtered = _dataset_parts(walkthrough_corpus)
    ds = build_dataset(walkthrough_corpus, filtered, src, wr, schema)
    path = tmp_path / "examples.bin"
    write_examples(ds, path)
    other = FeatureSchema.for_corpus(REGISTRIES, src, wr,
                                     source_dims=len(src) + 1)
    with pytest.raises(ValueError, match="fingerprint"):
        read_examples(path, other)
