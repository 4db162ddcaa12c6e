"""Passage ranking, diversity filtering, stance scoring and filtering, oracle reranking."""

from dataclasses import dataclass, field

from . import resources
from .errors import InputError
from .textproc import Token, is_content_word, is_word

STANCE_MAGNITUDE = 5.0
STANCE_EXPONENT = 5
NGRAM_WEIGHTS = {4: 0.5, 3: 0.3, 2: 0.2}
DEFAULT_TOP_P = 10


def _lowers(tokens):
    return [t.lower if isinstance(t, Token) else t for t in tokens]


def _content(tokens):
    """Lowercased content words, in order."""
    stop = None
    out = []
    for t in tokens:
        if isinstance(t, Token):
            if t.is_content:
                out.append(t.lower)
        else:
            if stop is None:
                stop = resources.stopwords()
            if is_content_word(t, stop):
                out.append(t)
    return out


def content_ngrams(tokens, n):
    """Distinct n-grams over the content-word subsequence of ``tokens``."""
    words = _content(tokens)
    return {tuple(words[i : i + n]) for i in range(len(words) - n + 1)}


def occurrences(seq, words):
    """Start indices where ``seq`` occurs contiguously in ``words``."""
    seq = tuple(seq)
    n = len(seq)
    if n == 0:
        return []
    return [i for i in range(len(words) - n + 1) if tuple(words[i : i + n]) == seq]


def contains_seq(words, seq):
    return bool(occurrences(seq, words))


@dataclass
class RankedPassage:
    passage: object
    score: float
    rank_key: tuple = ()
    stance: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def pid(self):
        return self.passage.pid


@dataclass(frozen=True)
class StanceTargets:
    targets: tuple
    lexicon: dict

    @classmethod
    def from_keyphrases(cls, keyphrases, lexicon):
        seqs = []
        for kp in keyphrases:
            seq = tuple(kp.lower_seq if hasattr(kp, "lower_seq") else kp)
            if seq and seq not in seqs:
                seqs.append(seq)
        return cls(tuple(seqs), lexicon)


def merge_dedup(results):
    """Union of per-query [(Passage, score)] lists by passage id; first-seen score wins."""
    seen = set()
    out = []
    for res in results:
        for passage, score in res:
            if passage.pid in seen:
                continue
            seen.add(passage.pid)
            out.append((passage, score))
    return out


def _descending_then_pid(key, pid):
    return tuple(-x for x in key) + (pid,)


def keyphrase_overlap(words, keyphrase_seqs):
    """Sum over matched keyphrases of their distinct-word counts."""
    return sum(len(set(seq)) for seq in keyphrase_seqs if contains_seq(words, seq))


def rank_passages(passages, statement_tokens, statement_keyphrases, statement_signatures):
    """Sort passages by overlap with the statement.

    Keys, in order: words in statement keyphrases found in the passage, number
    of statement signature words covered, shared content bigrams, shared
    content unigrams, retrieval score; passage id ascending breaks the rest.
    """
    kp_seqs = []
    for kp in statement_keyphrases:
        seq = tuple(kp.lower_seq if hasattr(kp, "lower_seq") else kp)
        if seq and seq not in kp_seqs:
            kp_seqs.append(seq)
    sigs = set(statement_signatures)
    st_bi = content_ngrams(statement_tokens, 2)
    st_uni = content_ngrams(statement_tokens, 1)
    ranked = []
    for passage, score in passages:
        words = _lowers(passage.tokens)
        wordset = set(words)
        key = (
            keyphrase_overlap(words, kp_seqs),
            len(sigs & wordset),
            len(st_bi & content_ngrams(passage.tokens, 2)),
            len(st_uni & content_ngrams(passage.tokens, 1)),
            score,
        )
        ranked.append(RankedPassage(passage, score, key))
    ranked.sort(key=lambda r: _descending_then_pid(r.rank_key, r.pid))
    return ranked


def diversity_filter(ranked):
    """Drop a passage when more than half its distinct content words are already covered."""
    covered = set()
    out = []
    for r in ranked:
        words = set(_content(r.passage.tokens))
        if words and 2 * len(words & covered) > len(words):
            continue
        out.append(r)
        covered |= words
    return out


def stance_score(tokens, targets):
    """Distance-discounted sentiment around opinion targets.

    Q = sum over target occurrences and sentiment tokens of polarity * d**-5,
    where d is the token offset from the first token of the target occurrence
    (at least 1).
    """
    words = _lowers(tokens)
    lexicon = targets.lexicon
    sentiment = [(i, lexicon[w]) for i, w in enumerate(words) if w in lexicon]
    if not sentiment:
        return 0.0
    q = 0.0
    for seq in targets.targets:
        for pos in occurrences(seq, words):
            for i, polarity in sentiment:
                d = max(1, abs(i - pos))
                q += polarity * d ** -STANCE_EXPONENT
    return q


def _sign(x):
    return (x > 0) - (x < 0)


def stance_filter(ranked, statement_q, threshold=STANCE_MAGNITUDE):
    """Keep passages of opposite stance sign with |Q| above ``threshold``.

    With a neutral statement (Q = 0) only the magnitude test applies.
    """
    want = -_sign(statement_q)
    out = []
    for r in ranked:
        if abs(r.stance) <= threshold:
            continue
        if want != 0 and _sign(r.stance) != want:
            continue
        out.append(r)
    return out


def weighted_ngram_coverage(passage_tokens, argument_tokens, weights=None):
    """0.5 * 4-gram + 0.3 * trigram + 0.2 * bigram coverage of the argument."""
    if weights is None:
        weights = NGRAM_WEIGHTS
    total = 0.0
    for n, w in weights.items():
        ref = content_ngrams(argument_tokens, n)
        if ref:
            total += w * len(ref & content_ngrams(passage_tokens, n)) / len(ref)
    return total


def oracle_rerank(passages, argument_tokens, statement_signatures, argument_signatures, targets, weights=None):
    """Rerank with the gold argument in view (training-data construction).

    Passages whose stance sign is strictly opposite to the argument's are
    removed; the rest sort on: statement signature coverage, weighted n-gram
    coverage of the argument, |stance|, content words shared with the
    argument, argument signature coverage, then retrieval score and id.
    """
    arg_words = _lowers(argument_tokens)
    if not any(is_word(w) for w in arg_words):
        raise InputError("oracle reranking needs a non-empty argument")
    arg_q = stance_score(argument_tokens, targets)
    arg_sign = _sign(arg_q)
    st_sigs = set(statement_signatures)
    arg_sigs = set(argument_signatures)
    arg_content = set(_content(argument_tokens))
    out = []
    for passage, score in passages:
        q = stance_score(passage.tokens, targets)
        if arg_sign != 0 and _sign(q) == -arg_sign:
            continue
        wordset = set(_lowers(passage.tokens))
        key = (
            len(st_sigs & wordset),
            weighted_ngram_coverage(passage.tokens, argument_tokens, weights),
            abs(q),
            len(arg_content & set(_content(passage.tokens))),
            len(arg_sigs & wordset),
            score,
        )
        out.append(RankedPassage(passage, score, key, q))
    out.sort(key=lambda r: _descending_then_pid(r.rank_key, r.pid))
    return out


def rank_chain(passages, statement_tokens, statement_keyphrases, statement_signatures, targets,
               top_p=DEFAULT_TOP_P, threshold=STANCE_MAGNITUDE, statement_q=None):
    """rank -> diversity -> stance, keeping the top ``top_p`` survivors."""
    ranked = rank_passages(passages, statement_tokens, statement_keyphrases, statement_signatures)
    ranked = diversity_filter(ranked)
    for r in ranked:
        r.stance = stance_score(r.passage.tokens, targets)
    if statement_q is None:
        statement_q = stance_score(statement_tokens, targets)
    kept = stance_filter(ranked, statement_q, threshold)
    return kept[:top_p], statement_q
