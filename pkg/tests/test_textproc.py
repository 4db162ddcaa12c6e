import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from counterarg.errors import InputError
from counterarg.textproc import (
    Token,
    chunk_candidates,
    expand_terms,
    extract_keyphrases,
    llr_statistic,
    pos_tag,
    split_sentences,
    tokenize,
    topic_signatures,
)
from counterarg.textproc.keyphrases import WordVectors


def surfaces(tokens):
    return [t.surface for t in tokens]


def tagged(pairs):
    return [Token(w, w.lower(), tag, tag.startswith(("NN", "JJ", "VB"))) for w, tag in pairs]


# ------------------------------------------------------------- tokenization


def test_clitics_and_punctuation():
    assert surfaces(tokenize("They don't pay, it's 3.5 km.")) == [
        "They", "do", "n't", "pay", ",", "it", "'s", "3.5", "km", ".",
    ]


def test_abbreviation_keeps_period_and_does_not_split():
    sents = split_sentences("Mr. Smith left. Dr. Jones stayed!")
    assert [surfaces(s.tokens) for s in sents] == [["Mr.", "Smith", "left", "."], ["Dr.", "Jones", "stayed", "!"]]


def test_closing_quote_stays_with_sentence():
    sents = split_sentences('He said "stop." Then left?')
    assert surfaces(sents[0].tokens)[-2:] == [".", '"']
    assert sents[1].is_question and not sents[0].is_question


def test_content_flag_uses_stopwords():
    toks = tokenize("The tax is unfair")
    assert [t.is_content for t in toks] == [False, True, False, True]


def test_empty_text_gives_no_tokens():
    assert tokenize("") == []
    assert split_sentences("") == []


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["tax", "a", "big", ".", "?", "Mr.", "don't", ",", "3.5"]), min_size=1, max_size=30))
def test_split_sentences_preserves_token_stream(words):
    text = " ".join(words)
    toks = tokenize(text)
    sents = split_sentences(text)
    assert [t for s in sents for t in s.tokens] == toks
    # only the last sentence may lack a terminal
    for s in sents[:-1]:
        assert any(t.surface in (".", "!", "?", "...") for t in s.tokens)


# ------------------------------------------------------------------ tagging


def test_tagger_lexicon_suffix_and_rules():
    toks = pos_tag(tokenize("The gun control debate will continue quickly"))
    tags = [t.pos for t in toks]
    assert tags[0] == "DT"
    assert tags[2] == "NN"  # noun-verb ambiguous word after a noun
    assert tags[4] == "MD" and tags[5] == "VB"
    assert tags[6] == "OTHER"  # -ly adverb


def test_sidecar_override_checks_alignment():
    toks = tokenize("Taxes rise")
    out = pos_tag(toks, override=[("Taxes", "NNS"), ("rise", "VBP")])
    assert [t.pos for t in out] == ["NNS", "VBP"]
    with pytest.raises(InputError):
        pos_tag(toks, override=[("Taxes", "NNS")])
    with pytest.raises(InputError):
        pos_tag(toks, override=[("Tax", "NNS"), ("rise", "VBP")])


# ----------------------------------------------------------------- chunking


def test_chunk_cascade_np_pp_vp():
    toks = tagged([("the", "DT"), ("new", "JJ"), ("law", "NN"), ("hurts", "VBZ"), ("in", "IN"), ("the", "DT"),
                   ("city", "NN")])
    got = [(c.kind, c.start, c.end) for c in chunk_candidates(toks)]
    assert got == [("NP", 0, 3), ("VP", 3, 7), ("NP", 5, 7)]


def test_chunk_leftmost_longest_np():
    toks = tagged([("big", "JJ"), ("red", "JJ"), ("tax", "NN"), ("cuts", "NNS")])
    assert [(c.kind, c.start, c.end) for c in chunk_candidates(toks)] == [("NP", 0, 4)]


def test_chunk_requires_tags():
    with pytest.raises(InputError):
        chunk_candidates(tokenize("no tags here"))


# --------------------------------------------------------------- signatures


def scipy_llr(k1, n1, k2, n2):
    p = (k1 + k2) / (n1 + n2)
    num = binom.logpmf(k1, n1, p) + binom.logpmf(k2, n2, p)
    den = binom.logpmf(k1, n1, k1 / n1) + binom.logpmf(k2, n2, k2 / n2)
    return -2.0 * (num - den)


@pytest.mark.parametrize("k1,n1,k2,n2", [(5, 100, 10, 10000), (1, 20, 0, 500), (30, 40, 300, 1000), (7, 7, 3, 90)])
def test_llr_matches_binomial_oracle(k1, n1, k2, n2):
    assert llr_statistic(k1, n1, k2, n2) == pytest.approx(scipy_llr(k1, n1, k2, n2), abs=1e-9)


def test_llr_degenerate_tables_are_zero():
    assert llr_statistic(0, 10, 0, 10) == 0.0
    assert llr_statistic(3, 0, 1, 10) == 0.0


def test_topic_signatures_threshold_and_direction():
    fg = ["tax"] * 8 + ["the"] * 8 + ["road"] * 1 + ["car"] * 3
    bg = Counter({"tax": 10, "the": 2000, "road": 300, "car": 10, "house": 680})
    sigs = topic_signatures(fg, bg, threshold=10.83)
    words = [s.word for s in sigs]
    assert "tax" in words and "car" in words
    assert "the" not in words  # stopword
    assert "road" not in words  # under-represented
    for s in sigs:
        assert s.llr >= 10.83
    assert [s.llr for s in sigs] == sorted((s.llr for s in sigs), reverse=True)


def test_expand_terms_one_hop_both_directions():
    rel = [("penalty", "synonym", "punishment"), ("execution", "hyponym", "penalty"), ("fine", "synonym", "fee")]
    assert expand_terms(["penalty"], rel) == {"penalty", "punishment", "execution"}
    assert expand_terms(["punishment"], rel) == {"punishment", "penalty"}


# --------------------------------------------------------------- keyphrases


def test_keyphrases_need_signature_or_gazetteer():
    sents = split_sentences("The death penalty deters crime in New York.")
    kps = extract_keyphrases(sents, {"penalty"}, gazetteer={"new york"})
    texts = [k.text for k in kps]
    assert "the death penalty" in texts
    assert "new york" in texts
    assert all("penalty" in t or t == "new york" or "new york" in t for t in texts)


def test_keyphrase_embeddings_sum_word_vectors():
    vecs = WordVectors({"death": [1.0, 0.0], "penalty": [0.0, 2.0]}, 2)
    kps = extract_keyphrases(split_sentences("The death penalty ends."), {"penalty"}, gazetteer=set(), vectors=vecs)
    kp = next(k for k in kps if k.text == "the death penalty")
    assert list(kp.embedding) == [1.0, 2.0]


def test_keyphrases_deduplicate_by_lowercased_sequence():
    sents = split_sentences("The carbon levy works. the carbon levy fails.")
    kps = extract_keyphrases(sents, {"carbon"}, gazetteer=set())
    assert [k.text for k in kps].count("the carbon levy") == 1


def test_llr_is_symmetric_under_relabeling():
    assert math.isclose(llr_statistic(4, 50, 9, 70), llr_statistic(9, 70, 4, 50), rel_tol=1e-12)
