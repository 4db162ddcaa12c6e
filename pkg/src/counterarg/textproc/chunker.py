"""Cascaded regular-expression chunker over POS tags.

Three rules are applied in order, each as a single leftmost-longest pass over
the output of the previous stage::

    NP: <DT|PP$>?<JJ|JJR>*<NN.*|CD|JJ>+
    PP: <IN><NP>
    VP: <MD>?<VB.*><NP|PP>

NP and VP chunks are returned as keyphrase candidates; PP chunks only exist as
parts of VPs.
"""

import re
from dataclasses import dataclass

from ..errors import InputError

GRAMMAR = (
    ("NP", "<DT|PP$>?<JJ|JJR>*<NN.*|CD|JJ>+"),
    ("PP", "<IN><NP>"),
    ("VP", "<MD>?<VB.*><NP|PP>"),
)


def compile_tag_pattern(pattern):
    """Translate an angle-bracket tag pattern into a regex over '<TAG>' strings."""

    def unit(m):
        alts = []
        for alt in m.group(1).split("|"):
            alts.append(re.escape(alt).replace(r"\.\*", "[^<>]*").replace(r"\.", "[^<>]"))
        return "(?:<(?:" + "|".join(alts) + ")>)"

    return re.compile(re.sub(r"<([^<>]+)>", unit, pattern))


_COMPILED = tuple((label, compile_tag_pattern(p)) for label, p in GRAMMAR)


@dataclass(frozen=True)
class Chunk:
    kind: str
    start: int
    end: int
    tokens: tuple

    @property
    def text(self):
        return " ".join(t.surface for t in self.tokens)

    @property
    def lower_seq(self):
        return tuple(t.lower for t in self.tokens)


@dataclass
class _Unit:
    label: str
    start: int
    end: int


def _leftmost_longest(units, regex):
    """Non-overlapping leftmost-longest matches; returns (i, j) unit index spans."""
    labels = ["<" + u.label + ">" for u in units]
    spans = []
    i = 0
    n = len(units)
    while i < n:
        for j in range(n, i, -1):
            if regex.fullmatch("".join(labels[i:j])):
                spans.append((i, j))
                i = j
                break
        else:
            i += 1
    return spans


def chunk_candidates(tagged):
    """Return NP and VP Chunks of a tagged token sequence, in order of start."""
    tagged = list(tagged)
    for i, tok in enumerate(tagged):
        if not tok.pos:
            raise InputError(f"token {i} ({tok.surface!r}) has no POS tag")

    units = [_Unit(tok.pos, i, i + 1) for i, tok in enumerate(tagged)]
    found = []
    for label, regex in _COMPILED:
        merged = []
        prev = 0
        for a, b in _leftmost_longest(units, regex):
            merged.extend(units[prev:a])
            merged.append(_Unit(label, units[a].start, units[b - 1].end))
            prev = b
            found.append((label, units[a].start, units[b - 1].end))
        merged.extend(units[prev:])
        units = merged

    out = [
        Chunk(label, s, e, tuple(tagged[s:e]))
        for label, s, e in found
        if label in ("NP", "VP")
    ]
    out.sort(key=lambda c: (c.start, -c.end, c.kind))
    return out
