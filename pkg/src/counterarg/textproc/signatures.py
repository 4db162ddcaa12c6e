"""Topic signature words via the binomial log-likelihood-ratio test."""

import math
from collections import Counter
from dataclasses import dataclass

from .. import resources
from .tokenize import Token, is_content_word

DEFAULT_LLR_THRESHOLD = 10.83  # chi-square critical value, p = 0.001


@dataclass(frozen=True)
class TopicSignature:
    word: str
    llr: float


def _log_likelihood(k, n, p):
    # k log p + (n - k) log(1 - p), with 0 log 0 = 0
    out = 0.0
    if k > 0:
        out += k * math.log(p)
    if n - k > 0:
        out += (n - k) * math.log1p(-p)
    return out


def llr_statistic(k1, n1, k2, n2):
    """-2 log(lambda) for a word seen k1/n1 times in the foreground, k2/n2 in the background.

    Degenerate tables (an empty side, or a word that occupies every position
    of both sides) give 0.
    """
    if n1 <= 0 or n2 <= 0:
        return 0.0
    p = (k1 + k2) / (n1 + n2)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    p1 = k1 / n1
    p2 = k2 / n2
    stat = 2.0 * (
        _log_likelihood(k1, n1, p1)
        + _log_likelihood(k2, n2, p2)
        - _log_likelihood(k1, n1, p)
        - _log_likelihood(k2, n2, p)
    )
    return max(stat, 0.0)


def _counts(items):
    if isinstance(items, Counter):
        return items
    return Counter(t.lower if isinstance(t, Token) else t.lower() for t in items)


def topic_signatures(foreground, background, threshold=DEFAULT_LLR_THRESHOLD, stopwords=None):
    """Content words over-represented in ``foreground`` relative to ``background``.

    Both arguments are token multisets (iterables of Tokens or strings, or
    Counters of lowercased words). Totals include every token passed in; only
    content words are scored. Returns TopicSignatures sorted by decreasing
    statistic, then word.
    """
    if stopwords is None:
        stopwords = resources.stopwords()
    fg = _counts(foreground)
    bg = _counts(background)
    n1 = sum(fg.values())
    n2 = sum(bg.values())
    if n2 == 0:
        raise ValueError("background corpus is empty")
    out = []
    for word, k1 in fg.items():
        if k1 <= 0 or not is_content_word(word, stopwords):
            continue
        k2 = bg.get(word, 0)
        if k1 / n1 <= k2 / n2:
            continue
        stat = llr_statistic(k1, n1, k2, n2)
        if stat >= threshold and stat > 0.0:
            out.append(TopicSignature(word, stat))
    out.sort(key=lambda s: (-s.llr, s.word))
    return out


def expand_terms(signatures, relations):
    """Union of signature words and their one-hop neighbours in ``relations``.

    ``relations`` is a list of (head, relation, tail) triples; edges are read
    in both directions, so a hyponym edge also serves as the reverse hypernym.
    """
    words = {s.word if isinstance(s, TopicSignature) else s for s in signatures}
    expanded = set(words)
    for head, _rel, tail in relations:
        if head in words:
            expanded.add(tail)
        if tail in words:
            expanded.add(head)
    return expanded
