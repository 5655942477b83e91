import json
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from notesieve.textfeat import (SparseVector, VocabConfig, Vocabulary,
                                bow_encode, build_vocabulary, pmi, tokenize)


def test_tokenize_basic():
    assert tokenize("Chest pain, rule-out MI.") == \
        ["chest", "pain", "rule", "out", "mi"]
    assert tokenize("WBC 12.5 on 01/02") == ["wbc", "12", "5", "on", "01", "02"]


def test_tokenize_placeholders_verbatim():
    assert tokenize("Seen on [DATE] by [NAME_1].") == \
        ["seen", "on", "[DATE]", "by", "[NAME_1]"]


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("!!! ---") == []


@given(st.text(max_size=50))
@settings(max_examples=200, deadline=None)
def test_tokenize_output_shape(text):
    for tok in tokenize(text):
        if tok.startswith("["):
            assert tok.endswith("]")
        else:
            assert tok == tok.lower()
            assert tok.isalnum()


def test_pmi_formula():
    uni = Counter({"a": 4, "b": 2, "c": 2})
    # P(ab) = 2/7, P(a) = 4/8, P(b) = 2/8
    got = pmi(("a", "b"), 2, 7, uni, 8)
    assert got == pytest.approx(math.log((2 / 7) / ((4 / 8) * (2 / 8))))


def test_pmi_undefined_cases():
    uni = Counter({"a": 1})
    assert pmi(("a", "z"), 1, 5, uni, 5) is None
    assert pmi(("a",), 0, 5, uni, 5) is None
    assert pmi(("a",), 1, 0, uni, 5) is None


# --- vocabulary selection vs. an exhaustive reference ---------------------

def _reference_vocabulary(texts, config):
    """Independent count-and-score reimplementation of the selection rules."""
    uni = Counter()
    bi = Counter()
    tri = Counter()
    bi_total = tri_total = 0
    for text in texts:
        toks = tokenize(text)
        uni.update(toks)
        for i in range(len(toks) - 1):
            bi[tuple(toks[i:i + 2])] += 1
        for i in range(len(toks) - 2):
            tri[tuple(toks[i:i + 3])] += 1
        bi_total += max(len(toks) - 1, 0)
        tri_total += max(len(toks) - 2, 0)
    uni_total = sum(uni.values())

    unigrams = sorted(
        (t for t, c in uni.items() if c >= config.min_count),
        key=lambda t: (-uni[t], t))[:config.max_unigrams]

    def pick(counts, total, top_n):
        scored = []
        for g, c in counts.items():
            if c < config.ngram_min_count:
                continue
            if any(uni[t] == 0 for t in g) or total == 0:
                continue
            p = (c / total) / math.prod(uni[t] / uni_total for t in g)
            scored.append((g, math.log(p), c))
        scored.sort(key=lambda x: (-x[1], -x[2], x[0]))
        return [g for g, _, _ in scored[:top_n]]

    return unigrams, pick(bi, bi_total, config.n_bigrams), \
        pick(tri, tri_total, config.n_trigrams)


WORDS = ["flank", "pain", "renal", "colic", "ct", "scan", "stone", "left",
         "acute", "chronic"]


@given(st.lists(st.lists(st.sampled_from(WORDS), min_size=0, max_size=40),
                min_size=1, max_size=25))
@settings(max_examples=60, deadline=None)
def test_build_vocabulary_matches_reference(token_lists):
    texts = [" ".join(toks) for toks in token_lists]
    config = VocabConfig(max_unigrams=6, min_count=2, n_bigrams=4,
                         n_trigrams=3, ngram_min_count=2)
    vocab = build_vocabulary(texts, config)
    ref_uni, ref_bi, ref_tri = _reference_vocabulary(texts, config)
    assert vocab.unigrams == ref_uni
    assert vocab.bigrams == ref_bi
    assert vocab.trigrams == ref_tri


def test_build_vocabulary_fixed_case():
    texts = ["renal colic left flank pain", "renal colic ct scan",
             "renal colic left flank pain", "ct scan stone", "renal stone"]
    config = VocabConfig(max_unigrams=3, min_count=2, n_bigrams=2,
                         n_trigrams=1, ngram_min_count=2)
    vocab = build_vocabulary(texts, config)
    # counts: renal 4, colic 3, left 2, flank 2, pain 2, ct 2, scan 2, stone 2
    assert vocab.unigrams == ["renal", "colic", "ct"]
    ref_uni, ref_bi, ref_tri = _reference_vocabulary(texts, config)
    assert vocab.bigrams == ref_bi
    assert vocab.trigrams == ref_tri
    assert len(vocab) == 3 + len(ref_bi) + len(ref_tri)


def test_ngrams_do_not_cross_texts():
    # "b a" only occurs across the text boundary, so it must never qualify
    vocab = build_vocabulary(["a b", "a b", "a b", "a b"],
                             VocabConfig(max_unigrams=10, min_count=1,
                                         n_bigrams=5, n_trigrams=5,
                                         ngram_min_count=1))
    assert ("a", "b") in vocab.bigrams
    assert ("b", "a") not in vocab.bigrams
    assert vocab.trigrams == []


def test_vocabulary_round_trip(tmp_path):
    vocab = build_vocabulary(
        ["alpha beta gamma alpha beta", "alpha beta gamma"],
        VocabConfig(max_unigrams=5, min_count=1, n_bigrams=2, n_trigrams=1,
                    ngram_min_count=1),
        corpus_role="written")
    path = tmp_path / "vocab.json"
    vocab.to_json(path)
    loaded = Vocabulary.from_json(path)
    assert loaded.unigrams == vocab.unigrams
    assert loaded.bigrams == vocab.bigrams
    assert loaded.trigrams == vocab.trigrams
    assert loaded.fingerprint == vocab.fingerprint
    assert loaded.corpus_role == "written"


def test_vocabulary_fingerprint_mismatch(tmp_path):
    vocab = build_vocabulary(["alpha beta"], VocabConfig(min_count=1))
    path = tmp_path / "vocab.json"
    vocab.to_json(path)
    data = json.loads(path.read_text())
    data["unigrams"].append("tampered")
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError, match="fingerprint"):
        Vocabulary.from_json(path)


def test_vocabulary_role_changes_fingerprint():
    a = Vocabulary(["x"], [], [], corpus_role="source")
    b = Vocabulary(["x"], [], [], corpus_role="written")
    assert a.fingerprint != b.fingerprint


def test_vocabulary_rejects_duplicates():
    with pytest.raises(ValueError, match="duplicate"):
        Vocabulary(["x", "x"], [], [])


def test_sparse_vector_validation():
    SparseVector(5, (0, 2, 4))
    with pytest.raises(ValueError):
        SparseVector(5, (2, 1))
    with pytest.raises(ValueError):
        SparseVector(5, (0, 5))


def test_bow_encode():
    vocab = Vocabulary(["pain", "flank", "renal"],
                       [("flank", "pain")], [("left", "flank", "pain")])
    vec = bow_encode(["left", "flank", "pain", "pain"], vocab)
    assert vec.dimension == 5
    # unigrams pain(0), flank(1); bigram flank pain(3); trigram(4)
    assert vec.indices == (0, 1, 3, 4)


def test_bow_encode_binary_presence():
    vocab = Vocabulary(["pain"], [], [])
    vec = bow_encode(["pain"] * 10, vocab)
    assert vec.indices == (0,)


def test_bow_encode_no_matches():
    vocab = Vocabulary(["pain"], [], [])
    assert bow_encode(["fever"], vocab).indices == ()
