import itertools
from collections import Counter

import numpy as np
import pytest

from counterarg import evalkit
from counterarg.errors import InputError

from oracles import naive_distinct

bleu_score = pytest.importorskip("nltk.translate.bleu_score")
meteor_mod = pytest.importorskip("nltk.translate.meteor_score")
rouge_scorer = pytest.importorskip("rouge_score.rouge_scorer")

WORDS = "cat dog tree river stone cloud bird fish lamp door road hill moon star rain wind".split()


class NoSynonyms:
    """Stand-in for the WordNet reader: no synonym matches at all."""

    def synsets(self, *args, **kwargs):
        return []


def nltk_bleu(hyps, refs, n):
    smooth = bleu_score.SmoothingFunction(epsilon=evalkit.BLEU_EPS).method1
    return bleu_score.corpus_bleu([[r] for r in refs], hyps, weights=(1 / n,) * n, smoothing_function=smooth)


def nltk_meteor(hyp, ref):
    from nltk.stem.porter import PorterStemmer

    return meteor_mod.meteor_score([ref], hyp, stemmer=PorterStemmer(), wordnet=NoSynonyms())


ROUGE = rouge_scorer.RougeScorer(["rouge2"], use_stemmer=False)


def rouge_golden(hyp, ref):
    return ROUGE.score(" ".join(ref), " ".join(hyp))["rouge2"].recall


def random_corpus(seed, n_pairs=5, vocab=WORDS[:8]):
    rng = np.random.default_rng(seed)
    draw = lambda: [str(w) for w in rng.choice(vocab, size=int(rng.integers(4, 13)))]  # noqa: E731
    return [draw() for _ in range(n_pairs)], [draw() for _ in range(n_pairs)]


# ------------------------------------------------------------- identities


def test_identity_scores_one():
    ref = "the tax cut will help small firms grow".split()
    assert evalkit.bleu([ref], [ref], 2) == pytest.approx(1.0, abs=1e-12)
    assert evalkit.rouge2_recall(ref, ref) == 1.0
    assert evalkit.meteor_lite(ref, ref) == pytest.approx(1 - 0.5 * (1 / len(ref)) ** 3)


def test_empty_reference_rejected():
    with pytest.raises(InputError):
        evalkit.rouge2_recall(["a"], [])
    with pytest.raises(InputError):
        evalkit.meteor_lite(["a"], [])
    with pytest.raises(InputError):
        evalkit.bleu([["a"]], [[]])
    with pytest.raises(InputError):
        evalkit.evaluate([{"id": "x", "hyp": ["a"], "ref": []}])


def test_distinct_edge_cases():
    assert evalkit.distinct_n([["a", "b", "a", "b"]], 1) == 2
    assert evalkit.distinct_n([["a", "b", "a", "b"]], 2) == 2
    assert evalkit.distinct_n([["a"]], 2) == 0
    assert evalkit.rouge2_recall(["a"], ["a"]) == 0.0


# --------------------------------------------------------------- goldens


@pytest.mark.parametrize("seed", range(12))
def test_bleu_matches_nltk(seed):
    hyps, refs = random_corpus(seed)
    for n in (2, 4):
        assert evalkit.bleu(hyps, refs, n) == pytest.approx(nltk_bleu(hyps, refs, n), abs=1e-4)


@pytest.mark.parametrize("seed", range(12))
def test_rouge2_matches_rouge_score(seed):
    hyps, refs = random_corpus(seed + 100)
    for h, r in zip(hyps, refs):
        assert evalkit.rouge2_recall(h, r) == pytest.approx(rouge_golden(h, r), abs=1e-4)


@pytest.mark.parametrize("seed", range(12))
def test_meteor_matches_nltk_without_synonyms(seed):
    # distinct words per side: alignment is then unambiguous for both implementations
    rng = np.random.default_rng(seed + 200)
    hyp = [str(w) for w in rng.choice(WORDS, size=int(rng.integers(3, 10)), replace=False)]
    ref = [str(w) for w in rng.choice(WORDS, size=int(rng.integers(3, 10)), replace=False)]
    assert evalkit.meteor_lite(hyp, ref) == pytest.approx(nltk_meteor(hyp, ref), abs=1e-4)


@pytest.mark.parametrize("hyp,ref", [
    ("the cats jumped over two dogs", "a cat jumps over the dog"),
    ("birds were singing in trees", "the bird sings in the tree"),
    ("running rivers carve stones", "the river runs over stone"),
])
def test_meteor_stem_matches_agree_with_porter(hyp, ref):
    h, r = hyp.split(), ref.split()
    assert evalkit.meteor_lite(h, r) == pytest.approx(nltk_meteor(h, r), abs=1e-4)


# -------------------------------------------------------- naive recounts


@pytest.mark.parametrize("seed", range(5))
def test_diversity_metrics_match_recount(seed):
    rng = np.random.default_rng(seed)
    args = [[str(w) for w in rng.choice(WORDS[:6], size=int(rng.integers(1, 15)))] for _ in range(7)]
    for n in (1, 2, 3, 4):
        assert evalkit.distinct_n(args, n) == pytest.approx(np.mean([naive_distinct(a, n) for a in args]))
    for n in (1, 2):
        pooled = [" ".join(a[i:i + n]) for a in args for i in range(len(a) - n + 1)]
        assert evalkit.ttr_n(args, n) == pytest.approx(len(set(pooled)) / len(pooled))
    freqs = Counter(str(w) for w in rng.choice(WORDS, size=300))
    for k in (1, 3, 8):
        ranked = sorted(freqs, key=lambda w: (-freqs[w], w))[:k]
        toks = [t for a in args for t in a]
        expected = sum(t not in ranked for t in toks) / len(toks)
        assert evalkit.uncommon_fraction(args, freqs, k) == pytest.approx(expected)


def test_randomization_test_against_exact_enumeration():
    rng = np.random.default_rng(0)
    a = rng.normal(0.5, 0.2, size=10)
    b = a - rng.normal(0.08, 0.1, size=10)
    d = a - b
    obs = abs(d.mean())
    flips = np.array(list(itertools.product([-1, 1], repeat=10)))
    exact = np.mean(np.abs((flips * d).mean(axis=1)) >= obs - 1e-12)
    approx = evalkit.paired_randomization_test(a, b, n_permutations=20000, seed=1)
    assert approx == pytest.approx(exact, abs=0.01)
    assert evalkit.paired_randomization_test(a, a) == 1.0
    with pytest.raises(InputError):
        evalkit.paired_randomization_test([1, 2], [1])


def test_evaluate_summary_and_table():
    recs = [{"id": "a", "hyp": "the cat sat .".split(), "ref": "the cat sat .".split()},
            {"id": "b", "hyp": "dogs bark . loudly".split(), "ref": "dogs bark loudly .".split()}]
    per, summary = evalkit.evaluate(recs, train_freqs=Counter({"the": 5, "cat": 3}), ks=(1,))
    assert [p["sentences"] for p in per] == [1, 2]
    assert summary["bleu2"] == pytest.approx(nltk_bleu([r["hyp"] for r in recs], [r["ref"] for r in recs], 2),
                                             abs=1e-4)
    assert summary["uncommon_fraction"]["1"] == pytest.approx(7 / 8)
    table = evalkit.format_table(summary, "demo")
    assert "B-2" in table and "demo" in table
    with pytest.raises(InputError):
        evalkit.evaluate([])
