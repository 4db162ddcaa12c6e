"""Rule-based English tokenization and sentence splitting (PTB conventions)."""

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .. import resources

_CLITICS = ("'s", "'m", "'re", "'ve", "'ll", "'d")
_QUOTES = frozenset({'"', "'", "``", "''", "“", "”", "‘", "’", ")", "]", "}"})
_TERMINALS = frozenset({".", "!", "?", "..."})

_TOKEN_TEMPLATE = r"""
    (?P<abbrev>(?<!\w)(?:{abbrevs})(?!\w))
  | (?P<acronym>(?:[A-Za-z]\.){{2,}})
  | (?P<number>\d+(?:[.,]\d+)*(?!\w))
  | (?P<clitic>'(?:s|m|re|ve|ll|d)\b|n't\b)
  | (?P<word>\w+(?:['’-]\w+)*)
  | (?P<ellipsis>\.\.\.)
  | (?P<punct>[^\w\s])
"""


@lru_cache(maxsize=8)
def _scanner(abbrevs):
    alts = "|".join(re.escape(a) for a in sorted(abbrevs, key=len, reverse=True)) or "(?!)"
    return re.compile(_TOKEN_TEMPLATE.format(abbrevs=alts), re.VERBOSE | re.IGNORECASE)


@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    lower: str
    pos: Optional[str] = None
    is_content: bool = False

    def with_pos(self, tag):
        return Token(self.surface, self.lower, tag, self.is_content)


@dataclass(frozen=True, slots=True)
class Sentence:
    tokens: tuple

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("a sentence needs at least one token")

    @property
    def is_question(self):
        for tok in reversed(self.tokens):
            if tok.surface in _QUOTES:
                continue
            return tok.surface == "?"
        return False

    @property
    def words(self):
        return [t for t in self.tokens if is_word(t.surface)]

    def __len__(self):
        return len(self.tokens)


def is_word(surface):
    return any(ch.isalnum() for ch in surface)


def is_content_word(lower, stopwords):
    return lower not in stopwords and is_word(lower)


def _split_clitic(word):
    low = word.lower()
    if low.endswith("n't") and len(word) > 3:
        return [word[:-3], word[-3:]]
    for clitic in _CLITICS:
        if low.endswith(clitic) and len(word) > len(clitic):
            return [word[: -len(clitic)], word[-len(clitic):]]
    return [word]


def tokenize(text, stopwords=None, abbrevs=None):
    """Split ``text`` into Tokens.

    Punctuation is split from words, English clitics follow the Penn Treebank
    convention ("don't" -> "do", "n't"), and tokens from the abbreviation list
    keep their trailing period.
    """
    if not text:
        return []
    if stopwords is None:
        stopwords = resources.stopwords()
    if abbrevs is None:
        abbrevs = resources.abbreviations()
    tokens = []
    for m in _scanner(frozenset(abbrevs)).finditer(text):
        piece = m.group()
        pieces = _split_clitic(piece.replace("’", "'")) if m.lastgroup == "word" else [piece]
        for s in pieces:
            low = s.lower()
            tokens.append(Token(s, low, None, is_content_word(low, stopwords)))
    return tokens


def detokenize(tokens):
    return " ".join(t.surface if isinstance(t, Token) else t for t in tokens)


def split_sentences(text_or_tokens, stopwords=None, abbrevs=None):
    """Group tokens into sentences, closing after '.', '!', '?' or '...'.

    Closing quotes and brackets directly after the terminal stay with the
    sentence they close.
    """
    if isinstance(text_or_tokens, str):
        tokens = tokenize(text_or_tokens, stopwords, abbrevs)
    else:
        tokens = list(text_or_tokens)
    sentences = []
    current = []
    closing = False
    for tok in tokens:
        if closing and tok.surface not in _QUOTES:
            sentences.append(Sentence(tuple(current)))
            current = []
            closing = False
        current.append(tok)
        if tok.surface in _TERMINALS:
            closing = True
    if current:
        sentences.append(Sentence(tuple(current)))
    return sentences
