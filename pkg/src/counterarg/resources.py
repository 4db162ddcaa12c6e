"""Loading of the shipped data files.

Every loader takes an explicit path; when omitted, the file is looked up in
``$CANDELA_DATA_DIR`` first and then in the package's ``data`` directory.
"""

import os
from functools import lru_cache
from pathlib import Path

from .errors import InputError

PACKAGE_DATA = Path(__file__).parent / "data"
DATA_ENV = "CANDELA_DATA_DIR"

RELATIONS = ("synonym", "hyponym", "hypernym", "antonym")


def data_path(name):
    override = os.environ.get(DATA_ENV)
    if override:
        candidate = Path(override) / name
        if candidate.exists():
            return candidate
    return PACKAGE_DATA / name


def _lines(path):
    """Yield (lineno, stripped line), skipping blanks and '#' comments."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_wordlist(path):
    return frozenset(line.strip().lower() for _, line in _lines(path))


@lru_cache(maxsize=None)
def _default_wordlist(name):
    return load_wordlist(data_path(name))


def stopwords(path=None):
    if path is not None:
        return load_wordlist(path)
    return _default_wordlist("stopwords.txt")


def abbreviations(path=None):
    if path is not None:
        return load_wordlist(path)
    return _default_wordlist("abbreviations.txt")


def load_gazetteer(path=None):
    if path is None:
        path = data_path("gazetteer.txt")
    return frozenset(" ".join(line.lower().split()) for _, line in _lines(path))


def load_pos_lexicon(path=None):
    from .textproc.tagger import TAGSET

    if path is None:
        path = data_path("pos_lexicon.tsv")
    lexicon = {}
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputError("expected 'word<TAB>tag'", path, lineno)
        word, tag = parts[0].strip().lower(), parts[1].strip()
        if tag not in TAGSET:
            raise InputError(f"unknown tag {tag!r}", path, lineno)
        lexicon[word] = tag
    return lexicon


def load_sentiment_lexicon(path=None):
    if path is None:
        path = data_path("sentiment_lexicon.tsv")
    lexicon = {}
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputError("expected 'word<TAB>+1|-1'", path, lineno)
        value = parts[1].strip().replace("−", "-")
        if value not in ("+1", "-1", "1"):
            raise InputError(f"polarity must be +1 or -1, got {value!r}", path, lineno)
        lexicon[parts[0].strip().lower()] = -1 if value == "-1" else 1
    return lexicon


def load_relation_lexicon(path=None):
    """Return a list of (head, relation, tail) triples."""
    if path is None:
        path = data_path("relations.txt")
    triples = []
    for lineno, line in _lines(path):
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3 or not all(parts):
            raise InputError("expected 'word|relation|word'", path, lineno)
        head, rel, tail = parts
        if rel not in RELATIONS:
            raise InputError(f"unknown relation {rel!r}", path, lineno)
        triples.append((head.lower(), rel, tail.lower()))
    return triples


def load_discourse_markers(path=None):
    """Return marker phrases (lowercased strings), in file order, deduplicated."""
    if path is None:
        path = data_path("discourse_markers.txt")
    markers = []
    for lineno, line in _lines(path):
        parts = line.split("\t")
        phrase = parts[-1].strip().lower()
        if not phrase:
            raise InputError("empty marker", path, lineno)
        if phrase not in markers:
            markers.append(phrase)
    return markers
