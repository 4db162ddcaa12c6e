"""Lexicon + suffix part-of-speech tagger with a pre-tagged sidecar override."""

import re

from .. import resources
from ..errors import InputError

TAGSET = frozenset(
    "DT PP$ JJ JJR NN NNS NNP CD IN MD VB VBD VBG VBN VBP VBZ OTHER".split()
)

# first matching suffix wins; checked only for words missing from the lexicon
SUFFIX_RULES = (
    ("ness", "NN"),
    ("ment", "NN"),
    ("tion", "NN"),
    ("sion", "NN"),
    ("ship", "NN"),
    ("ity", "NN"),
    ("ance", "NN"),
    ("ence", "NN"),
    ("ism", "NN"),
    ("ist", "NN"),
    ("ing", "VBG"),
    ("ed", "VBD"),
    ("ly", "OTHER"),
    ("ous", "JJ"),
    ("ful", "JJ"),
    ("ive", "JJ"),
    ("able", "JJ"),
    ("ible", "JJ"),
    ("less", "JJ"),
    ("ic", "JJ"),
    ("al", "JJ"),
    ("ss", "NN"),
    ("us", "NN"),
    ("is", "NN"),
    ("s", "NNS"),
)

# verb-first lexicon entries read as nouns after a determiner, adjective or noun
NOUN_VERB_AMBIGUOUS = frozenset(
    "control use work cost change ban tax vote fund support need fear value "
    "increase decrease benefit reform attack result report limit return end "
    "help play share charge claim cut lack love hope".split()
)

_NUMBER = re.compile(r"^\d+(?:[.,]\d+)*(?:st|nd|rd|th|s)?$")

_lexicon_cache = None


def default_lexicon():
    global _lexicon_cache
    if _lexicon_cache is None:
        _lexicon_cache = resources.load_pos_lexicon()
    return _lexicon_cache


def guess_tag(word, sentence_initial=False, lexicon=None):
    if lexicon is None:
        lexicon = default_lexicon()
    low = word.lower()
    if low in lexicon:
        return lexicon[low]
    if not any(ch.isalnum() for ch in word):
        return "OTHER"
    if _NUMBER.match(low):
        return "CD"
    if word[0].isupper() and not sentence_initial:
        return "NNP"
    if len(low) > 3:
        for suffix, tag in SUFFIX_RULES:
            if low.endswith(suffix):
                return tag
    return "NN"


def pos_tag(tokens, lexicon=None, override=None):
    """Return copies of ``tokens`` with ``pos`` filled.

    ``override`` is a list of (surface, tag) pairs, typically read from a
    sidecar file; when given, its tags are used verbatim.
    """
    tokens = list(tokens)
    if not tokens:
        raise ValueError("pos_tag needs at least one token")
    if override is not None:
        if len(override) != len(tokens):
            raise InputError(
                f"sidecar has {len(override)} tokens, text has {len(tokens)}"
            )
        out = []
        for i, (tok, (surface, tag)) in enumerate(zip(tokens, override)):
            if surface != tok.surface:
                raise InputError(f"sidecar token {i} is {surface!r}, text has {tok.surface!r}")
            out.append(tok.with_pos(tag))
        return out

    if lexicon is None:
        lexicon = default_lexicon()
    tags = []
    for i, tok in enumerate(tokens):
        initial = i == 0 or tokens[i - 1].surface in (".", "!", "?", '"', "``")
        tag = guess_tag(tok.surface, initial, lexicon)
        if tags and tags[-1] == "MD" and tag in ("NN", "VBP"):
            tag = "VB"
        elif (
            tags
            and tag == "VB"
            and tags[-1] in ("DT", "PP$", "JJ", "JJR", "NN")
            and tok.lower in NOUN_VERB_AMBIGUOUS
        ):
            tag = "NN"
        tags.append(tag)
    return [tok.with_pos(tag) for tok, tag in zip(tokens, tags)]


def read_sidecar(path):
    """Parse a pre-tagged file: 'surface<TAB>tag' per token, blank line between sentences.

    Returns a list of sentences, each a list of (surface, tag).
    """
    sentences = []
    current = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                if current:
                    sentences.append(current)
                    current = []
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise InputError("expected 'surface<TAB>tag'", path, lineno)
            surface, tag = parts
            if tag not in TAGSET:
                raise InputError(f"unknown tag {tag!r}", path, lineno)
            current.append((surface, tag))
    if current:
        sentences.append(current)
    return sentences
