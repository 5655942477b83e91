import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from notesieve.featurizer import FeatureSchema
from notesieve.model import LogisticModel
from notesieve.service import (JUDGMENT_LABELS, JudgmentRecord, JudgmentStore,
                               compare_judgments, create_app)
from notesieve.textfeat import VocabConfig, build_vocabulary

from conftest import REGISTRIES, minute


@pytest.fixture
def parts(walkthrough_corpus):
    cfg = VocabConfig(max_unigrams=100, min_count=1, n_bigrams=0, n_trigrams=0)
    src = build_vocabulary(
        (walkthrough_corpus.documents[d].text
         for d in sorted(walkthrough_corpus.documents)),
        cfg, corpus_role="source")
    wr = build_vocabulary(
        [walkthrough_corpus.snapshots[v][-1].text
         for v in sorted(walkthrough_corpus.snapshots)],
        cfg, corpus_role="written")
    schema = FeatureSchema.for_corpus(REGISTRIES, src, wr)
    w = np.zeros(schema.total_dim)
    off = schema.block("recency").offset
    w[off:off + 5] = [5.0, 4.0, 3.0, 2.0, 1.0]
    model = LogisticModel(weights=w, bias=-3.0, lam=1e-4,
                          schema_fingerprint=schema.fingerprint)
    return walkthrough_corpus, model, schema, src, wr


@pytest.fixture
def client(parts, tmp_path):
    corpus, model, schema, src, wr = parts
    app = create_app(corpus, model, schema, src, wr,
                     judgment_path=tmp_path / "judgments.jsonl")
    return TestClient(app)


def test_startup_fingerprint_checks(parts, tmp_path):
    corpus, model, schema, src, wr = parts
    bad_model = LogisticModel(weights=model.weights, bias=0.0, lam=1e-4,
                              schema_fingerprint="deadbeef")
    with pytest.raises(ValueError, match="fingerprint"):
        create_app(corpus, bad_model, schema, src, wr, tmp_path / "j.jsonl")
    other_src = build_vocabulary(["unrelated words"],
                                 VocabConfig(min_count=1), corpus_role="source")
    with pytest.raises(ValueError, match="fingerprint"):
        create_app(corpus, model, schema, other_src, wr, tmp_path / "j.jsonl")


def test_healthz(client, parts):
    _, model, *_ = parts
    resp = client.get("/healthz")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["model_fingerprint"] == model.schema_fingerprint


def test_rank_endpoint(client):
    resp = client.post("/rank", json={
        "visit_id": "v1", "current_note_text": "chest pain",
        "timestamp": minute(13), "k": 3})
    assert resp.status_code == 200
    body = resp.json()
    assert body["visit_id"] == "v1"
    assert body["session_index"] == 3
    assert len(body["items"]) == 3
    times = [i["creation_time"] for i in body["items"]]
    assert times == sorted(times, reverse=True)
    for item in body["items"]:
        assert set(item) == {"doc_id", "probability", "creation_time",
                             "service", "note_type", "relative_time"}


def test_rank_unknown_visit(client):
    resp = client.post("/rank", json={
        "visit_id": "zzz", "timestamp": minute(5)})
    assert resp.status_code == 404
    assert resp.json()["error"] == "unknown_visit"


def test_rank_invalid_k(client):
    resp = client.post("/rank", json={
        "visit_id": "v1", "timestamp": minute(5), "k": 0})
    assert resp.status_code == 400
    assert resp.json()["error"] == "invalid_k"


def test_rank_timestamp_outside_visit(client):
    resp = client.post("/rank", json={
        "visit_id": "v1", "timestamp": minute(31)})
    assert resp.status_code == 400
    assert resp.json()["error"] == "timestamp_outside_visit"


def test_rank_timestamp_regression(client):
    assert client.post("/rank", json={
        "visit_id": "v1", "timestamp": minute(10)}).status_code == 200
    resp = client.post("/rank", json={
        "visit_id": "v1", "timestamp": minute(9)})
    assert resp.status_code == 400
    assert resp.json()["error"] == "timestamp_regression"


def test_rank_malformed_body(client):
    resp = client.post("/rank", json={"visit_id": "v1"})
    assert resp.status_code == 400
    assert resp.json()["error"] == "invalid_request"


def test_timeline(client):
    resp = client.get("/visits/v1/timeline")
    assert resp.status_code == 200
    body = resp.json()
    assert body["visit"]["patient_id"] == "px"
    assert len(body["snapshots"]) == 4
    assert len(body["read_events"]) == 4
    assert [s["index"] for s in body["sessions"]] == [1, 2, 3, 4]
    assert body["sessions"][0]["positive_doc_ids"] == ["d2"]
    assert len(body["documents"]) == 5
    assert client.get("/visits/zzz/timeline").status_code == 404


def test_model_weights_endpoint(client):
    resp = client.get("/model/weights", params={"n": 2, "sign": "+"})
    assert resp.status_code == 200
    weights = resp.json()["weights"]
    assert len(weights) == 2
    assert weights[0]["feature"] == "recency_1"
    assert weights[0]["weight"] == 5.0
    assert client.get("/model/weights", params={"sign": "x"}).status_code == 400


def test_judgment_round_trip(client):
    resp = client.post("/judgments", json={
        "annotator_id": "ann1", "visit_id": "v1", "session_index": 2,
        "doc_id": "d1", "label": "relevant_positive"})
    assert resp.status_code == 200
    resp = client.get("/judgments", params={"visit_id": "v1"})
    recs = resp.json()["judgments"]
    assert len(recs) == 1
    assert recs[0]["label"] == "relevant_positive"
    # last write wins for the same (annotator, visit, session, doc)
    client.post("/judgments", json={
        "annotator_id": "ann1", "visit_id": "v1", "session_index": 2,
        "doc_id": "d1", "label": "irrelevant_negative"})
    recs = client.get("/judgments").json()["judgments"]
    assert len(recs) == 1
    assert recs[0]["label"] == "irrelevant_negative"


def test_judgment_invalid_label(client):
    resp = client.post("/judgments", json={
        "annotator_id": "a", "visit_id": "v1", "session_index": 1,
        "doc_id": "d1", "label": "meh"})
    assert resp.status_code == 400
    assert resp.json()["error"] == "invalid_label"


def test_judgment_unknown_visit(client):
    resp = client.post("/judgments", json={
        "annotator_id": "a", "visit_id": "zzz", "session_index": 1,
        "doc_id": "d1", "label": "relevant_positive"})
    assert resp.status_code == 404


def test_agreement_view(client):
    ranked = client.post("/rank", json={
        "visit_id": "v1", "timestamp": minute(13), "k": 3}).json()
    top = [i["doc_id"] for i in ranked["items"]]
    client.post("/judgments", json={
        "annotator_id": "a", "visit_id": "v1",
        "session_index": ranked["session_index"],
        "doc_id": top[0], "label": "relevant_positive"})
    client.post("/judgments", json={
        "annotator_id": "a", "visit_id": "v1",
        "session_index": ranked["session_index"],
        "doc_id": "d1", "label": "relevant_positive"})
    body = client.get("/judgments/agreement").json()
    assert body["n_relevant_positive"] == 2
    ranks = {d["doc_id"]: d["rank"] for d in body["judgments"]}
    assert ranks[top[0]] == 1
    assert ranks["d1"] is None  # not in the served top-3
    assert body["captured_fraction"] == pytest.approx(0.5)


def test_judgment_store_persistence(tmp_path):
    path = tmp_path / "j.jsonl"
    store = JudgmentStore(path)
    store.add(JudgmentRecord("a", "v1", 1, "d1", "relevant_negative", 100))
    store.add(JudgmentRecord("a", "v1", 1, "d1", "relevant_positive", 200))
    store.add(JudgmentRecord("b", "v1", 2, "d2", "irrelevant_negative", 300))
    # the file stays append-only: all three writes are on disk
    assert len(path.read_text().strip().splitlines()) == 3
    reloaded = JudgmentStore(path)
    recs = reloaded.all()
    assert len(recs) == 2
    by_key = {r.key: r.label for r in recs}
    assert by_key[("a", "v1", 1, "d1")] == "relevant_positive"


def test_judgment_store_rejects_bad_label(tmp_path):
    store = JudgmentStore(tmp_path / "j.jsonl")
    with pytest.raises(ValueError):
        store.add(JudgmentRecord("a", "v", 1, "d", "nope", 0))


def test_compare_judgments_empty():
    out = compare_judgments([], {})
    assert out["captured_fraction"] is None
    assert out["judgments"] == []


def test_judgment_labels_schema():
    assert JUDGMENT_LABELS == ("relevant_positive", "relevant_negative",
                               "irrelevant_negative")


def test_ui_mount_absent_is_fine(parts, tmp_path):
    corpus, model, schema, src, wr = parts
    app = create_app(corpus, model, schema, src, wr,
                     judgment_path=tmp_path / "j.jsonl",
                     ui_dir=tmp_path / "missing")
    assert TestClient(app).get("/healthz").status_code == 200


def test_ui_mount_serves_static(parts, tmp_path):
    corpus, model, schema, src, wr = parts
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>ok</body></html>")
    app = create_app(corpus, model, schema, src, wr,
                     judgment_path=tmp_path / "j.jsonl", ui_dir=ui)
    resp = TestClient(app).get("/ui/")
    assert resp.status_code == 200
    assert "ok" in resp.text
