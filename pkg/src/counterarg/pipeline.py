"""Stage logic shared by the CLI: record (de)serialization and the retrieve/rank/prep/generate chains."""

from collections import Counter
from dataclasses import dataclass

from . import beamdec, dataprep, ranker, resources
from .corpus_index import Passage, formulate_queries, retrieve, word_count
from .errors import InputError
from .textproc import (
    Token,
    detokenize,
    expand_terms,
    extract_keyphrases,
    is_content_word,
    split_sentences,
    topic_signatures,
)

# ------------------------------------------------------------------ records


def passage_to_record(p, score=None, extra=None):
    rec = {
        "pid": p.pid,
        "article_id": p.article_id,
        "start": p.start,
        "end": p.end,
        "medium": p.medium,
        "date": p.date,
        "tokens": [t.surface for t in p.tokens],
    }
    if score is not None:
        rec["score"] = score
    if extra:
        rec.update(extra)
    return rec


def passage_from_record(rec, stopwords=None):
    if stopwords is None:
        stopwords = resources.stopwords()
    try:
        toks = tuple(Token(s, s.lower(), None, is_content_word(s.lower(), stopwords)) for s in rec["tokens"])
        return Passage(
            pid=rec["pid"],
            article_id=rec["article_id"],
            start=int(rec["start"]),
            end=int(rec["end"]),
            tokens=toks,
            word_count=word_count(toks),
            medium=rec.get("medium", ""),
            date=rec.get("date"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad passage record: {exc}") from None


def article_to_record(a):
    return {"id": a.id, "medium": a.medium, "date": a.date, "text": a.text}


def statement_text(rec):
    text = rec.get("statement")
    if not isinstance(text, str) or not text.strip():
        raise InputError(f"record {rec.get('id')!r} has no statement text")
    return text


# --------------------------------------------------------- statement analysis


def index_background(index):
    """Corpus word counts from an index's postings."""
    return Counter({term: sum(tf for _, tf in plist) for term, plist in index.postings.items()})


@dataclass
class StatementView:
    sentences: list
    tokens: list
    signatures: list  # signature words
    expanded: set
    keyphrases: list
    targets: object


def analyze_statement(text, background, llr_threshold, relations=None, gazetteer=None, sentiment=None):
    """Signatures, expanded terms, keyphrases and stance targets for one statement."""
    sentences = split_sentences(text)
    if not sentences:
        raise InputError("statement has no tokens")
    tokens = [t for s in sentences for t in s.tokens]
    if relations is None:
        relations = resources.load_relation_lexicon()
    if sentiment is None:
        sentiment = resources.load_sentiment_lexicon()
    sigs = [s.word for s in topic_signatures(tokens, background, llr_threshold)] if background else []
    expanded = expand_terms(sigs, relations)
    kps = extract_keyphrases(sentences, expanded, gazetteer)
    targets = ranker.StanceTargets.from_keyphrases(kps, sentiment)
    return StatementView(sentences, tokens, sigs, expanded, kps, targets)


def argument_signatures(text, background, llr_threshold):
    toks = [t for s in split_sentences(text) for t in s.tokens]
    if not toks or not background:
        return []
    return [s.word for s in topic_signatures(toks, background, llr_threshold)]


# -------------------------------------------------------------------- chains


def retrieve_candidates(index, sentences, topk, medium=None):
    """formulate_queries -> retrieve -> merge_dedup."""
    results = [retrieve(index, q, topk, medium) for q in formulate_queries(sentences)]
    return ranker.merge_dedup(results)


def rank_candidates(candidates, view, cfg, oracle_argument=None, argument_sigs=()):
    """rank -> diversity -> stance (or the oracle reranker when a gold argument is given).

    Returns (ranked list, statement Q, note) where note flags a stance fallback.
    """
    if oracle_argument is not None:
        arg_toks = [t for s in split_sentences(oracle_argument) for t in s.tokens]
        ranked = ranker.oracle_rerank(candidates, arg_toks, view.signatures, argument_sigs, view.targets)
        return ranked[: cfg.top_p], ranker.stance_score(view.tokens, view.targets), None
    kept, q = ranker.rank_chain(
        candidates, view.tokens, view.keyphrases, view.signatures, view.targets, cfg.top_p, cfg.stance_threshold
    )
    if not kept and cfg.stance_fallback:
        pre = ranker.diversity_filter(ranker.rank_passages(candidates, view.tokens, view.keyphrases, view.signatures))
        for r in pre:
            r.stance = ranker.stance_score(r.passage.tokens, view.targets)
        return pre[: cfg.top_p], q, "stance_fallback"
    return kept, q, None


def ranked_to_records(ranked):
    return [
        passage_to_record(r.passage, r.score, {"stance": r.stance, "rank_key": list(r.rank_key)}) for r in ranked
    ]


def ranked_from_records(recs):
    out = []
    for rec in recs:
        p = passage_from_record(rec)
        out.append(ranker.RankedPassage(p, rec.get("score", 0.0), tuple(rec.get("rank_key", ())), rec.get("stance", 0.0)))
    return out


def keyphrase_records(keyphrases):
    return [{"tokens": list(k.lower_seq), "content": list(k.content_words), "kind": k.kind} for k in keyphrases]


def generate_one(model, vocab, view, ranked, cfg):
    """Encode statement + ranked passages, build the keyphrase memory, and beam-decode."""
    from .argmodel import build_encoder_input

    statement = dataprep.truncate_statement([t.lower for t in view.tokens], cfg.max_statement_tokens)
    kept, pids, memory = dataprep.build_memory(ranked, view.expanded, cfg.max_passage_tokens)
    if not memory:
        raise InputError("no keyphrases could be extracted from the ranked passages")
    input_ids = build_encoder_input(vocab.ids(statement), [vocab.ids([t.lower for t in p]) for p in kept], vocab.sep_id)
    stepper = beamdec.ModelStepper(
        model,
        vocab,
        input_ids,
        [vocab.ids(m["tokens"]) for m in memory],
        [vocab.ids(m["content"]) for m in memory],
    )
    result = beamdec.beam_search(stepper, cfg.beam, cfg.max_tokens, cfg.max_sentences)
    return format_generation(result, vocab, memory, pids)


def format_generation(result, vocab, memory, passage_ids):
    sentences, current = [], []
    for tok in vocab.tokens(result.tokens):
        if tok in ("<eos>", "<eoa>"):
            sentences.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        sentences.append(current)
    words = [w for s in sentences for w in s]
    plans = [
        {
            "selected": [" ".join(memory[m]["tokens"]) for m in p["selected"]],
            "label": "Content" if p["label"] == 1 else "Filler",
        }
        for p in result.plans
    ]
    return {
        "tokens": words,
        "sentences": sentences,
        "text": " ".join(detokenize(s) for s in sentences),
        "plans": plans,
        "logprob": result.logprob,
        "covered": result.covered,
        "finish": result.finish,
        "fallback": result.fallback,
        "passage_ids": passage_ids,
    }
