"""Article ingestion, sliding-window passage segmentation, and a BM25 inverted index."""

import hashlib
import json
import math
import struct
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from . import resources
from .errors import InputError
from .textproc import Token, is_word, split_sentences

MIN_WORDS = 50
WINDOW = 3
STEP = 2
DEFAULT_TOPK = 20

INDEX_MAGIC = b"CAIDX\x00"
INDEX_VERSION = 1


def normalize_text(text):
    return " ".join(text.lower().split())


def article_id(text):
    return hashlib.sha1(normalize_text(text).encode("utf-8")).hexdigest()[:16]


def word_count(tokens):
    return sum(1 for t in tokens if is_word(t.surface))


@dataclass
class Article:
    id: str
    medium: str
    date: object
    text: str
    sentences: list = field(repr=False)

    @property
    def n_words(self):
        return sum(word_count(s.tokens) for s in self.sentences)


@dataclass
class Passage:
    pid: str
    article_id: str
    start: int
    end: int
    tokens: tuple = field(repr=False)
    word_count: int = 0
    medium: str = ""
    date: object = None

    @property
    def span(self):
        return (self.start, self.end)

    @property
    def words(self):
        return [t.lower for t in self.tokens if is_word(t.surface)]

    @property
    def text(self):
        return " ".join(t.surface for t in self.tokens)


def make_pid(art_id, start):
    return f"{art_id}:{start:05d}"


def ingest(records, media=None, stopwords=None):
    """Parse raw article records; returns (articles, rejections).

    ``records`` yields dicts or JSON lines with fields ``medium``, ``text`` and
    optional ``id``/``date``. Rejections are dicts with ``index``, ``reason``
    and, where known, ``id``; a bad record never stops the stream.
    """
    if stopwords is None:
        stopwords = resources.stopwords()
    articles = []
    rejections = []
    seen = {}
    for i, rec in enumerate(records):
        if isinstance(rec, (str, bytes)):
            if not rec.strip():
                continue
            try:
                rec = json.loads(rec)
            except json.JSONDecodeError as exc:
                rejections.append({"index": i, "reason": "malformed", "detail": str(exc)})
                continue
        if not isinstance(rec, dict):
            rejections.append({"index": i, "reason": "malformed", "detail": "record is not an object"})
            continue
        text = rec.get("text")
        medium = rec.get("medium")
        if not isinstance(text, str) or not isinstance(medium, str) or not medium:
            rejections.append({"index": i, "reason": "malformed", "detail": "missing text or medium", "id": rec.get("id")})
            continue
        if media is not None and medium not in media:
            rejections.append({"index": i, "reason": "unknown_medium", "id": rec.get("id"), "medium": medium})
            continue
        aid = article_id(text)
        if aid in seen:
            rejections.append({"index": i, "reason": "duplicate", "id": aid, "duplicate_of": seen[aid]})
            continue
        sentences = split_sentences(text, stopwords)
        art = Article(aid, medium, rec.get("date"), text, sentences)
        if art.n_words < MIN_WORDS:
            rejections.append({"index": i, "reason": "too_short", "id": aid, "words": art.n_words})
            continue
        seen[aid] = i
        articles.append(art)
    return articles, rejections


def segment_spans(sentence_lengths, window=WINDOW, step=STEP, min_words=MIN_WORDS):
    """Window spans [start, end) over sentences with the given word counts.

    Windows start every ``step`` sentences and grow to the right one sentence
    at a time until they hold ``min_words``; a window that reaches the end of
    the article short of that is dropped. Generation stops once a window has
    reached the last sentence, since later windows would be contained in it.
    """
    n = len(sentence_lengths)
    spans = []
    start = 0
    while start < n:
        end = min(start + window, n)
        words = sum(sentence_lengths[start:end])
        while words < min_words and end < n:
            words += sentence_lengths[end]
            end += 1
        if words >= min_words:
            spans.append((start, end))
        if end >= n:
            break
        start += step
    return spans


def segment(article):
    lengths = [word_count(s.tokens) for s in article.sentences]
    out = []
    for start, end in segment_spans(lengths):
        toks = tuple(t for s in article.sentences[start:end] for t in s.tokens)
        out.append(
            Passage(
                pid=make_pid(article.id, start),
                article_id=article.id,
                start=start,
                end=end,
                tokens=toks,
                word_count=sum(lengths[start:end]),
                medium=article.medium,
                date=article.date,
            )
        )
    return out


@dataclass
class Query:
    terms: tuple
    source_sentence: int


def query_ok(sentence):
    content = [t.lower for t in sentence.tokens if t.is_content]
    limit = 10 if sentence.is_question else 5
    return len(content) > limit and len(set(content)) >= 3


def formulate_queries(sentences):
    """One query per sentence that has enough (and enough distinct) content words."""
    out = []
    for i, sent in enumerate(sentences):
        if query_ok(sent):
            out.append(Query(tuple(t.lower for t in sent.tokens if t.is_content), i))
    return out


class Index:
    """Inverted index over passage word tokens with BM25 scoring."""

    def __init__(self, postings, doc_lengths, passages, k1=1.2, b=0.75):
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.passages = passages
        self.k1 = k1
        self.b = b
        self.N = len(doc_lengths)
        self.avgdl = (sum(doc_lengths.values()) / self.N) if self.N else 0.0

    def df(self, term):
        return len(self.postings.get(term, ()))

    def idf(self, term):
        df = self.df(term)
        return math.log((self.N - df + 0.5) / (df + 0.5) + 1.0)

    def media(self):
        return sorted({p.medium for p in self.passages.values()})

    def to_bytes(self):
        payload = {
            "k1": self.k1,
            "b": self.b,
            "passages": [_passage_record(self.passages[pid]) for pid in sorted(self.passages)],
            "postings": {term: self.postings[term] for term in sorted(self.postings)},
        }
        body = zlib.compress(json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8"), 9)
        return INDEX_MAGIC + struct.pack("<HQ", INDEX_VERSION, len(body)) + body

    @classmethod
    def from_bytes(cls, data):
        head = len(INDEX_MAGIC)
        if data[:head] != INDEX_MAGIC:
            raise InputError("not an index file (bad magic)")
        version, length = struct.unpack("<HQ", data[head : head + 10])
        if version != INDEX_VERSION:
            raise InputError(f"unsupported index version {version}")
        body = data[head + 10 :]
        if len(body) != length:
            raise InputError("truncated index file")
        payload = json.loads(zlib.decompress(body).decode("utf-8"))
        passages = {}
        for rec in payload["passages"]:
            p = _passage_from_record(rec)
            passages[p.pid] = p
        postings = {t: [tuple(x) for x in plist] for t, plist in payload["postings"].items()}
        doc_lengths = {pid: p.word_count for pid, p in passages.items()}
        return cls(postings, doc_lengths, passages, payload["k1"], payload["b"])

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _passage_record(p):
    return {
        "pid": p.pid,
        "article_id": p.article_id,
        "start": p.start,
        "end": p.end,
        "medium": p.medium,
        "date": p.date,
        "surfaces": [t.surface for t in p.tokens],
        "content": "".join("1" if t.is_content else "0" for t in p.tokens),
    }


def _passage_from_record(rec):
    toks = tuple(
        Token(s, s.lower(), None, flag == "1") for s, flag in zip(rec["surfaces"], rec["content"])
    )
    return Passage(
        pid=rec["pid"],
        article_id=rec["article_id"],
        start=rec["start"],
        end=rec["end"],
        tokens=toks,
        word_count=word_count(toks),
        medium=rec["medium"],
        date=rec["date"],
    )


def build_index(passages, k1=1.2, b=0.75):
    passages = list(passages)
    if not passages:
        raise InputError("cannot build an index from zero passages")
    by_id = {}
    for p in passages:
        if p.pid in by_id:
            raise InputError(f"duplicate passage id {p.pid}")
        by_id[p.pid] = p
    postings = defaultdict(list)
    doc_lengths = {}
    for pid in sorted(by_id):
        words = by_id[pid].words
        doc_lengths[pid] = len(words)
        for term, tf in sorted(Counter(words).items()):
            postings[term].append((pid, tf))
    return Index(dict(postings), doc_lengths, by_id, k1, b)


def retrieve(index, query, k=DEFAULT_TOPK, medium=None):
    """Top-k passages (optionally of one medium) by BM25; returns [(Passage, score)].

    Query terms count with multiplicity. Ties break on passage id ascending;
    passages scoring zero are not returned.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    terms = query.terms if isinstance(query, Query) else tuple(query)
    scores = defaultdict(float)
    k1, b, avgdl = index.k1, index.b, index.avgdl
    for term, qtf in sorted(Counter(terms).items()):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for pid, tf in plist:
            if medium is not None and index.passages[pid].medium != medium:
                continue
            dl = index.doc_lengths[pid]
            scores[pid] += qtf * idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
    ranked = sorted(((s, pid) for pid, s in scores.items() if s > 0), key=lambda x: (-x[0], x[1]))
    return [(index.passages[pid], s) for s, pid in ranked[:k]]
