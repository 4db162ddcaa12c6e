"""Training pair construction: sentence function labels, keyphrase selection labels, length caps."""

import json
from dataclasses import asdict, dataclass, field
from enum import Enum

from . import resources
from .errors import InputError
from .textproc import Sentence, extract_keyphrases, is_word, split_sentences, tokenize

MAX_STATEMENT_TOKENS = 500
MAX_PASSAGE_TOKENS = 400
MAX_ARGUMENT_TOKENS = 120
BOUNDARY_SLACK = 10

PRONOUNS = frozenset(
    "he she it they them this that these those i we you his her its their".split()
)

SEP = "<sep>"
START_MARKER = -1


class FunctionLabel(str, Enum):
    FILLER = "Filler"
    CONTENT = "Content"

    @property
    def index(self):
        return 1 if self is FunctionLabel.CONTENT else 0


def _marker_seqs(markers):
    seqs = []
    for m in markers:
        seq = tuple(m) if isinstance(m, (tuple, list)) else tuple(t.lower for t in tokenize(m))
        if seq and seq not in seqs:
            seqs.append(seq)
    return seqs


def starts_with_marker(tokens, marker_seqs):
    lowers = [t.lower for t in tokens]
    return any(tuple(lowers[: len(seq)]) == seq for seq in marker_seqs)


def initial_label(sentence, signature_words, marker_seqs):
    """Label from the sentence alone, before the pronoun back-pass."""
    words = [t.lower for t in sentence.tokens if is_word(t.surface)]
    min_len = 20 if sentence.is_question else 10
    if len(words) < min_len:
        return FunctionLabel.FILLER
    hits = len(set(words) & signature_words)
    if hits >= 2:
        return FunctionLabel.CONTENT
    if hits >= 1 and starts_with_marker(sentence.tokens, marker_seqs):
        return FunctionLabel.CONTENT
    return FunctionLabel.FILLER


def opens_with_pronoun(sentence, pronouns=PRONOUNS):
    first = [t.lower for t in sentence.tokens if is_word(t.surface)][:3]
    return any(w in pronouns for w in first)


def pronoun_pass(sentences, labels, pronouns=PRONOUNS):
    labels = list(labels)
    for j in range(len(sentences) - 1, 0, -1):
        if labels[j] is FunctionLabel.CONTENT and opens_with_pronoun(sentences[j], pronouns):
            labels[j - 1] = FunctionLabel.CONTENT
    return labels


def label_functions(sentences, statement_signatures, argument_signatures, markers=None, pronouns=PRONOUNS):
    """Content/Filler label per argument sentence.

    A sentence is Content when it is long enough (10 words, 20 for questions)
    and has two signature words, or one signature word and an opening
    discourse marker. A Content sentence opening with a pronoun within its
    first three words makes the previous sentence Content too.
    """
    if not sentences:
        raise InputError("cannot label an empty sentence list")
    if markers is None:
        markers = resources.load_discourse_markers()
    marker_seqs = _marker_seqs(markers)
    sigs = set(statement_signatures) | set(argument_signatures)
    labels = [initial_label(s, sigs, marker_seqs) for s in sentences]
    return pronoun_pass(sentences, labels, pronouns)


def selection_labels(memory, sentences):
    """Gold keyphrase selection per sentence.

    Returns a list of dicts {memory index: witness word}; entry 0 is the start
    step ``{START_MARKER: "<start>"}`` and entry j >= 1 covers sentence j.
    A keyphrase is selected when it shares a content word with the sentence.
    """
    out = [{START_MARKER: "<start>"}]
    kp_words = [set(_kp_content(kp)) for kp in memory]
    for sent in sentences:
        words = {t.lower for t in sent.tokens if t.is_content}
        chosen = {}
        for m, kw in enumerate(kp_words):
            shared = kw & words
            if shared:
                chosen[m] = min(shared)
        out.append(chosen)
    return out


def _kp_content(kp):
    if hasattr(kp, "content_words"):
        return kp.content_words
    return kp["content"]


@dataclass
class TrainingPair:
    pair_id: str
    statement: list
    passages: list
    memory: list
    argument: list
    labels: list
    selection: list
    witnesses: list = field(default_factory=list)
    passage_ids: list = field(default_factory=list)

    @property
    def argument_tokens(self):
        return [w for s in self.argument for w in s]

    def to_record(self):
        rec = asdict(self)
        rec["selection_bitmaps"] = [
            [1 if m in sel else 0 for m in range(len(self.memory))] for sel in self.selection
        ]
        del rec["selection"]
        return rec

    @classmethod
    def from_record(cls, rec):
        sel = [sorted(m for m, bit in enumerate(bits) if bit) for bits in rec["selection_bitmaps"]]
        return cls(
            pair_id=rec["pair_id"],
            statement=list(rec["statement"]),
            passages=list(rec["passages"]),
            memory=[dict(m) for m in rec["memory"]],
            argument=[list(s) for s in rec["argument"]],
            labels=list(rec["labels"]),
            selection=sel,
            witnesses=list(rec.get("witnesses", [])),
            passage_ids=list(rec.get("passage_ids", [])),
        )


def truncate_statement(tokens, cap=MAX_STATEMENT_TOKENS):
    return list(tokens[:cap])


def truncate_passages(passage_token_lists, cap=MAX_PASSAGE_TOKENS):
    """Keep passages in rank order until ``cap`` tokens; separators are not counted.

    Returns the kept (possibly shortened) token lists.
    """
    kept = []
    used = 0
    for toks in passage_token_lists:
        room = cap - used
        if room <= 0:
            break
        piece = list(toks[:room])
        if piece:
            kept.append(piece)
            used += len(piece)
    return kept


def join_passages(kept):
    out = []
    for i, piece in enumerate(kept):
        if i:
            out.append(SEP)
        out.extend(piece)
    return out


def truncate_argument(sentences, cap=MAX_ARGUMENT_TOKENS, slack=BOUNDARY_SLACK):
    """Cut a sentence list to ``cap`` tokens.

    Prefers the last sentence boundary when it lies within ``slack`` tokens of
    the cap; otherwise cuts inside the sentence that crosses it.
    """
    total = sum(len(s) for s in sentences)
    if total <= cap:
        return [list(s) for s in sentences]
    out = []
    used = 0
    for s in sentences:
        if used + len(s) > cap:
            if cap - used > slack or not out:
                out.append(list(s[: cap - used]))
            break
        out.append(list(s))
        used += len(s)
    return [s for s in out if s]


def build_memory(ranked_passages, signature_words, cap=MAX_PASSAGE_TOKENS, gazetteer=None):
    """Truncate ranked passages to ``cap`` tokens and extract the keyphrase memory from what is left.

    Returns (kept token lists, kept passage ids, memory records).
    """
    passages = [getattr(r, "passage", r) for r in ranked_passages]
    kept = truncate_passages([p.tokens for p in passages], cap)
    passage_ids = [p.pid for p in passages[: len(kept)]]
    mem_sents = [s for piece in kept for s in split_sentences(piece)]
    memory = [
        {"tokens": list(kp.lower_seq), "content": list(kp.content_words), "kind": kp.kind}
        for kp in extract_keyphrases(mem_sents, signature_words, gazetteer)
    ]
    return kept, passage_ids, memory


def assemble_pair(pair_id, statement_sentences, ranked_passages, argument_sentences, signature_words,
                  statement_signatures=(), argument_signatures=(), markers=None, gazetteer=None,
                  caps=(MAX_STATEMENT_TOKENS, MAX_PASSAGE_TOKENS, MAX_ARGUMENT_TOKENS)):
    """Build a TrainingPair, or return (None, reason) when the argument is empty.

    ``ranked_passages`` are Passages (or RankedPassages) in rank order. The
    keyphrase memory is extracted from the passage text that survives
    truncation, using the statement's (expanded) signature words.
    """
    st_cap, psg_cap, arg_cap = caps
    statement = truncate_statement([t.lower for s in statement_sentences for t in s.tokens], st_cap)

    kept, passage_ids, memory = build_memory(ranked_passages, signature_words, psg_cap, gazetteer)

    arg_token_sents = truncate_argument([list(s.tokens) for s in argument_sentences], arg_cap)
    if not arg_token_sents:
        return None, "empty_argument"
    arg_sents = [Sentence(tuple(s)) for s in arg_token_sents]

    labels = label_functions(arg_sents, statement_signatures, argument_signatures, markers)
    sel = selection_labels(memory, arg_sents)
    selection = [sorted(m for m in d if m != START_MARKER) for d in sel]
    witnesses = [{str(m): w for m, w in d.items() if m != START_MARKER} for d in sel]

    pair = TrainingPair(
        pair_id=str(pair_id),
        statement=statement,
        passages=[[t.lower for t in piece] for piece in kept],
        memory=memory,
        argument=[[t.lower for t in s] for s in arg_token_sents],
        labels=[lab.value for lab in labels],
        selection=selection,
        witnesses=witnesses,
        passage_ids=passage_ids,
    )
    return pair, None


def write_pairs(pairs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_record(), sort_keys=True) + "\n")


def read_pairs(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(TrainingPair.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"bad training pair record: {exc}", path, lineno) from None
    return out
