import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from counterarg.corpus_index import (
    Index,
    build_index,
    formulate_queries,
    ingest,
    retrieve,
    segment,
    segment_spans,
    word_count,
)
from counterarg.errors import InputError
from counterarg.textproc import split_sentences

from oracles import brute_bm25, segmentation_violations
from synth import bm25_corpus, make_passage


def article_text(lengths, rng=None):
    """One sentence per length, each with that many words."""
    sents = []
    for i, n in enumerate(lengths):
        sents.append(" ".join(f"w{i}x{j}" for j in range(n)) + ".")
    return " ".join(sents)


# ------------------------------------------------------------------ ingest


def test_ingest_rejections_do_not_stop_stream():
    good = {"medium": "news", "text": article_text([20, 20, 20])}
    recs = [
        "not json",
        json.dumps({"medium": "news"}),
        json.dumps(good),
        json.dumps(good),  # duplicate text
        json.dumps({"medium": "news", "text": "too short."}),
        json.dumps({"medium": "radio", "text": article_text([30, 30])}),
    ]
    arts, rej = ingest(recs, media={"news"})
    assert len(arts) == 1
    assert [r["reason"] for r in rej] == ["malformed", "malformed", "duplicate", "too_short", "unknown_medium"]
    assert [r["index"] for r in rej] == [0, 1, 3, 4, 5]


def test_article_id_is_content_hash():
    a1, _ = ingest([{"medium": "news", "text": article_text([60])}])
    a2, _ = ingest([{"medium": "blog", "text": article_text([60])}])
    assert a1[0].id == a2[0].id


# ------------------------------------------------------------ segmentation


def test_segment_spans_hand_examples():
    assert segment_spans([20] * 7) == [(0, 3), (2, 5), (4, 7)]
    assert segment_spans([10, 10, 10, 30, 10]) == [(0, 4), (2, 5)]
    assert segment_spans([10, 10, 10]) == []


def test_segment_passages_carry_tokens_and_metadata():
    arts, _ = ingest([{"medium": "news", "date": "2019-05-01", "text": article_text([20] * 7)}])
    ps = segment(arts[0])
    assert [p.span for p in ps] == [(0, 3), (2, 5), (4, 7)]
    sents = arts[0].sentences
    for p in ps:
        assert p.tokens == tuple(t for s in sents[p.start:p.end] for t in s.tokens)
        assert p.word_count == word_count(p.tokens) == 60
        assert p.medium == "news" and p.date == "2019-05-01"
    assert len({p.pid for p in ps}) == 3


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=45), min_size=1, max_size=25))
def test_segment_spans_match_rule_checker(lengths):
    assert segmentation_violations(lengths, segment_spans(lengths)) == []


# ------------------------------------------------------------------- index


def test_index_roundtrip_bytes(tmp_path):
    ps, _ = bm25_corpus(30, seed=3)
    idx = build_index(ps)
    path = tmp_path / "x.idx"
    idx.save(path)
    back = Index.load(path)
    assert back.postings == idx.postings
    assert back.doc_lengths == idx.doc_lengths
    assert back.to_bytes() == idx.to_bytes()


def test_index_rejects_bad_files_and_duplicates():
    with pytest.raises(InputError):
        Index.from_bytes(b"garbage")
    p = make_passage("a", ["x", "y"])
    with pytest.raises(InputError):
        build_index([p, p])
    with pytest.raises(InputError):
        build_index([])


@pytest.mark.parametrize("n,seed", [(10, 0), (100, 1)])
def test_retrieve_matches_brute_force(n, seed):
    ps, words = bm25_corpus(n, seed=seed)
    idx = build_index(ps)
    docs = {p.pid: p.words for p in ps}
    media = {p.pid: p.medium for p in ps}
    rng = np.random.default_rng(seed)
    for _ in range(20):
        q = [words[i] for i in rng.integers(0, len(words), size=int(rng.integers(1, 6)))]
        for medium in (None, "blog"):
            got = [(p.pid, s) for p, s in retrieve(idx, q, k=n, medium=medium)]
            want = brute_bm25(docs, q, medium=medium, media=media)
            assert [g[0] for g in got] == [w[0] for w in want]
            assert max((abs(g[1] - w[1]) for g, w in zip(got, want)), default=0.0) <= 1e-9


def test_retrieve_topk_and_unknown_terms():
    ps, words = bm25_corpus(50, seed=4)
    idx = build_index(ps)
    assert len(retrieve(idx, [words[0]], k=5)) == 5
    assert retrieve(idx, ["zzzz-not-a-term"]) == []
    with pytest.raises(InputError):
        retrieve(idx, [words[0]], k=0)


def test_query_formulation_needs_enough_content():
    sents = split_sentences(
        "The death penalty deters violent crime in many states. It is bad. "
        "Why would anyone support the death penalty when innocent people are executed by mistake?"
    )
    qs = formulate_queries(sents)
    assert [q.source_sentence for q in qs] == [0]
    assert qs[0].terms == ("death", "penalty", "deters", "violent", "crime", "states")
