"""Keyphrase selection over chunk candidates."""

from dataclasses import dataclass, field

import numpy as np

from .. import resources
from ..errors import InputError
from .chunker import chunk_candidates
from .tagger import pos_tag

MAX_KEYPHRASE_TOKENS = 10


class WordVectors:
    """Read-only word -> vector table with a fixed dimension."""

    def __init__(self, table, dim):
        self.table = table
        self.dim = dim

    @classmethod
    def empty(cls, dim):
        return cls({}, dim)

    @classmethod
    def load(cls, path):
        """Text format: 'word v1 ... vd' per line; d comes from the first line.

        A leading 'count dim' header line (word2vec text style) is accepted.
        """
        table = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                parts = raw.rstrip().split(" ")
                if not parts or parts == [""]:
                    continue
                if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                    dim = int(parts[1])
                    continue
                if dim is None:
                    dim = len(parts) - 1
                if len(parts) - 1 != dim:
                    raise InputError(f"expected {dim} values, got {len(parts) - 1}", path, lineno)
                try:
                    table[parts[0]] = np.array([float(v) for v in parts[1:]])
                except ValueError as exc:
                    raise InputError(str(exc), path, lineno) from None
        if dim is None:
            raise InputError("no vectors found", path)
        return cls(table, dim)

    def __contains__(self, word):
        return word in self.table

    def get(self, word):
        vec = self.table.get(word)
        if vec is None:
            return np.zeros(self.dim)
        return vec


@dataclass
class Keyphrase:
    tokens: tuple
    kind: str
    embedding: np.ndarray = field(repr=False, compare=False)

    @property
    def lower_seq(self):
        return tuple(t.lower for t in self.tokens)

    @property
    def text(self):
        return " ".join(self.lower_seq)

    @property
    def content_words(self):
        return tuple(t.lower for t in self.tokens if t.is_content)


def gazetteer_hit(lower_seq, gazetteer, leading_tags=()):
    """Exact lowercased title match, also tried with a leading determiner removed."""
    if " ".join(lower_seq) in gazetteer:
        return True
    if len(lower_seq) > 1 and leading_tags and leading_tags[0] in ("DT", "PP$"):
        return " ".join(lower_seq[1:]) in gazetteer
    return False


def keyphrase_ok(tokens, signature_words, gazetteer):
    if len(tokens) > MAX_KEYPHRASE_TOKENS:
        return False
    if not any(t.is_content for t in tokens):
        return False
    if any(t.lower in signature_words for t in tokens):
        return True
    return gazetteer_hit(tuple(t.lower for t in tokens), gazetteer, tuple(t.pos for t in tokens))


def extract_keyphrases(sentences, signature_words, gazetteer=None, vectors=None, dim=300, tagged=False):
    """Select NP/VP candidates that pass the keyphrase rules.

    A candidate is kept if it has at most 10 tokens, at least one content word,
    and either a signature word or an exact gazetteer title match. Duplicates
    (same lowercased token sequence) keep the first occurrence.
    """
    if gazetteer is None:
        gazetteer = resources.load_gazetteer()
    if vectors is None:
        vectors = WordVectors.empty(dim)
    signature_words = set(signature_words)
    seen = set()
    out = []
    for sent in sentences:
        toks = sent.tokens if hasattr(sent, "tokens") else sent
        if not toks:
            continue
        if not tagged and any(t.pos is None for t in toks):
            toks = pos_tag(toks)
        for cand in chunk_candidates(toks):
            key = cand.lower_seq
            if key in seen:
                continue
            if not keyphrase_ok(cand.tokens, signature_words, gazetteer):
                continue
            seen.add(key)
            emb = np.zeros(vectors.dim)
            for t in cand.tokens:
                emb = emb + vectors.get(t.lower)
            out.append(Keyphrase(cand.tokens, cand.kind, emb))
    return out
