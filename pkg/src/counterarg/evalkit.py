"""Automatic metrics: BLEU, ROUGE-2 recall, METEOR-lite, distinct-n, TTR, uncommon-word fraction."""

import math
from collections import Counter

import numpy as np

from .errors import InputError

BLEU_EPS = 1e-9
DEFAULT_KS = (100, 500, 1000, 2000)


def ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _check_ref(ref):
    if not ref:
        raise InputError("empty reference")


# -------------------------------------------------------------------- BLEU


def _closest_ref_len(hyp_len, refs):
    return min((abs(len(r) - hyp_len), len(r)) for r in refs)[1]


def bleu(hyps, refs, n=4, eps=BLEU_EPS):
    """Corpus-level BLEU-n with uniform weights and brevity penalty.

    ``refs`` holds, per hypothesis, either one token list or a list of token
    lists. Clipped n-gram matches are pooled over the corpus; an order with
    zero matches contributes eps in place of its numerator.
    """
    if len(hyps) != len(refs):
        raise InputError("bleu: hypothesis and reference counts differ")
    if n < 1:
        raise InputError("bleu: n must be >= 1")
    matches = [0] * n
    totals = [0] * n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        ref_list = [ref] if ref and isinstance(ref[0], str) else list(ref)
        if not ref_list or any(not r for r in ref_list):
            raise InputError("empty reference")
        hyp_len += len(hyp)
        ref_len += _closest_ref_len(len(hyp), ref_list)
        for k in range(1, n + 1):
            h = ngrams(hyp, k)
            best = Counter()
            for r in ref_list:
                best |= ngrams(r, k)
            matches[k - 1] += sum(min(c, best[g]) for g, c in h.items())
            totals[k - 1] += max(len(hyp) - k + 1, 0)
    if hyp_len == 0:
        return 0.0
    log_p = 0.0
    for m, t in zip(matches, totals):
        num = m if m > 0 else eps
        den = t if t > 0 else 1
        log_p += math.log(num / den) / n
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_p)


# ------------------------------------------------------------------- ROUGE


def rouge2_recall(hyp, ref):
    """Matched bigrams (clipped) over reference bigrams; 0 when the reference is one token."""
    _check_ref(ref)
    r = ngrams(ref, 2)
    total = sum(r.values())
    if total == 0:
        return 0.0
    h = ngrams(hyp, 2)
    return sum(min(c, h[g]) for g, c in r.items()) / total


# ------------------------------------------------------------ METEOR-lite

_VOWELS = set("aeiou")


def _has_vowel(stem):
    return any(ch in _VOWELS for ch in stem) or ("y" in stem[1:])


def stem(word):
    """Plural and -ed/-ing stripping in the style of Porter's first step."""
    w = word.lower()
    if len(w) <= 3:
        return w
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]
    for suf in ("ing", "ed"):
        if w.endswith(suf) and _has_vowel(w[: -len(suf)]) and len(w) - len(suf) >= 3:
            w = w[: -len(suf)]
            if w.endswith(("at", "bl", "iz")):
                w += "e"
            elif len(w) >= 2 and w[-1] == w[-2] and w[-1] not in "lsz" and w[-1] not in _VOWELS:
                w = w[:-1]
            break
    if w.endswith("y") and len(w) > 2 and _has_vowel(w[:-1]):
        w = w[:-1] + "i"
    return w


def align(hyp, ref, stemmer=stem):
    """Exact matches first, then stem matches among the leftovers; returns sorted (hyp_i, ref_j) pairs."""
    pairs = []
    free_ref = list(range(len(ref)))
    free_hyp = list(range(len(hyp)))
    for key in (lambda w: w.lower(), lambda w: stemmer(w)):
        rkeys = {}
        for j in free_ref:
            rkeys.setdefault(key(ref[j]), []).append(j)
        still = []
        for i in free_hyp:
            slots = rkeys.get(key(hyp[i]))
            if slots:
                j = slots.pop(0)
                pairs.append((i, j))
                free_ref.remove(j)
            else:
                still.append(i)
        free_hyp = still
    return sorted(pairs)


def count_chunks(pairs):
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_lite(hyp, ref, alpha=0.9, beta=3.0, gamma=0.5):
    """Recall-weighted harmonic mean times (1 - gamma * (chunks / matches) ** beta).

    Only exact and stem matches are used (no synonym tables).
    """
    _check_ref(ref)
    if not hyp:
        return 0.0
    pairs = align(hyp, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(hyp)
    r = m / len(ref)
    fmean = p * r / (alpha * p + (1 - alpha) * r)
    penalty = gamma * (count_chunks(pairs) / m) ** beta
    return fmean * (1 - penalty)


# ---------------------------------------------------------------- diversity


def distinct_n(arguments, n):
    """Mean number of distinct n-grams per argument."""
    if n < 1:
        raise InputError("n must be >= 1")
    if not arguments:
        return 0.0
    return float(np.mean([len(ngrams(a, n)) for a in arguments]))


def ttr_n(arguments, n):
    """Distinct n-grams over the whole corpus divided by the total n-gram count."""
    if n < 1:
        raise InputError("n must be >= 1")
    pooled = Counter()
    for a in arguments:
        pooled.update(ngrams(a, n))
    total = sum(pooled.values())
    return len(pooled) / total if total else 0.0


def top_k_words(freqs, k):
    """The k most frequent words; equal counts are ordered alphabetically."""
    ranked = sorted(freqs.items(), key=lambda kv: (-kv[1], kv[0]))
    return {w for w, _ in ranked[:k]}


def uncommon_fraction(arguments, freqs, k):
    """Fraction of argument tokens outside the top-k training words."""
    top = top_k_words(freqs, k)
    total = sum(len(a) for a in arguments)
    if total == 0:
        return 0.0
    return sum(1 for a in arguments for t in a if t not in top) / total


# --------------------------------------------------------------- significance


def paired_randomization_test(a, b, n_permutations=10000, seed=0):
    """Two-sided approximate randomization test on paired per-item scores; returns p."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("paired test needs two equal-length score lists")
    observed = abs(a.mean() - b.mean())
    rng = np.random.default_rng(seed)
    diff = a - b
    flips = rng.integers(0, 2, size=(n_permutations, len(a))) * 2 - 1
    stats = np.abs((flips * diff).mean(axis=1))
    hits = int(np.sum(stats >= observed - 1e-12))
    return (hits + 1) / (n_permutations + 1)


# ------------------------------------------------------------------ report

SENT_END = {".", "!", "?"}


def count_sentences(tokens):
    n = 0
    for i, t in enumerate(tokens):
        if t in SENT_END and (i + 1 == len(tokens) or tokens[i + 1] not in SENT_END):
            n += 1
    if tokens and tokens[-1] not in SENT_END:
        n += 1
    return n


def evaluate(records, train_freqs=None, ks=DEFAULT_KS):
    """Score hypotheses against references.

    ``records`` is a list of dicts with ``id``, ``hyp`` and ``ref`` token
    lists (optionally ``sentences``: the hypothesis sentence count). Returns
    (per_pair, summary) where summary carries the corpus-level figures.
    """
    if not records:
        raise InputError("nothing to evaluate")
    per_pair = []
    hyps, refs = [], []
    for rec in records:
        hyp, ref = list(rec["hyp"]), list(rec["ref"])
        _check_ref(ref)
        hyps.append(hyp)
        refs.append(ref)
        per_pair.append(
            {
                "id": rec["id"],
                "bleu2": bleu([hyp], [ref], 2),
                "bleu4": bleu([hyp], [ref], 4),
                "rouge2_recall": rouge2_recall(hyp, ref),
                "meteor_lite": meteor_lite(hyp, ref),
                "words": len(hyp),
                "sentences": rec.get("sentences", count_sentences(hyp)),
            }
        )
    summary = {
        "pairs": len(records),
        "bleu2": bleu(hyps, refs, 2),
        "bleu4": bleu(hyps, refs, 4),
        "bleu_level": "corpus",
        "rouge2_recall": float(np.mean([p["rouge2_recall"] for p in per_pair])),
        "meteor_lite": float(np.mean([p["meteor_lite"] for p in per_pair])),
        "avg_words": float(np.mean([p["words"] for p in per_pair])),
        "avg_sentences": float(np.mean([p["sentences"] for p in per_pair])),
        "distinct": {str(n): distinct_n(hyps, n) for n in (1, 2, 3, 4)},
        "ttr": {str(n): ttr_n(hyps, n) for n in (1, 2)},
    }
    if train_freqs:
        summary["uncommon_fraction"] = {str(k): uncommon_fraction(hyps, train_freqs, k) for k in ks}
    return per_pair, summary


def format_table(summary, system="system"):
    cols = [("B-2", "bleu2"), ("B-4", "bleu4"), ("R-2", "rouge2_recall"), ("MTR-lite", "meteor_lite"),
            ("#Word", "avg_words"), ("#Sent", "avg_sentences")]
    head = f"{'System':<16}" + "".join(f"{c:>10}" for c, _ in cols)
    row = f"{system:<16}"
    for c, key in cols:
        v = summary[key]
        row += f"{v * 100:>10.2f}" if key in ("bleu2", "bleu4", "rouge2_recall", "meteor_lite") else f"{v:>10.1f}"
    note = "BLEU is corpus-level; ROUGE-2 recall and METEOR-lite are means over pairs (x100)."
    return "\n".join([head, "-" * len(head), row, "", note]) + "\n"
