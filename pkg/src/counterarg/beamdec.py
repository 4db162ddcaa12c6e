"""Beam search with sentence-end coverage reranking and 4-gram repetition blocking.

The search talks to a duck-typed step model:

    start() -> (planner_state, realizer_state)
    plan(planner_state, used) -> plan with .selected, .stop, .state, .label
    step(realizer_state, prev_token, plan) -> (realizer_state, logprobs ndarray)

plus attributes ``start_id``, ``eos_id``, ``eoa_id`` and ``phrases`` (one
tuple of content-word ids per memory entry). Tests drive it with scripted
logits; ``ModelStepper`` adapts a trained model.

Both decoders refuse to end a sentence before it has a token: sentence-end
and argument-end scores are masked at every sentence start.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import nncore as nn
from .errors import InputError

DEFAULT_WIDTH = 5
DEFAULT_MAX_TOKENS = 120
DEFAULT_MAX_SENTENCES = 10
NGRAM = 4


def repeats_ngram(tokens, n=NGRAM):
    """True when the final n-gram of ``tokens`` already occurs earlier in it."""
    if len(tokens) < n + 1:
        return False
    last = tuple(tokens[-n:])
    for i in range(len(tokens) - n):
        if tuple(tokens[i : i + n]) == last:
            return True
    return False


def has_repeated_ngram(tokens, n=NGRAM):
    seen = set()
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        if gram in seen:
            return True
        seen.add(gram)
    return False


def _contains(tokens, seq):
    k = len(seq)
    return any(tuple(tokens[i : i + k]) == seq for i in range(len(tokens) - k + 1))


def coverage(tokens, phrases, selected):
    """Number of selected memory entries whose phrase occurs contiguously in ``tokens``."""
    count = 0
    for m in selected:
        seq = tuple(phrases[m]) if phrases[m] is not None else ()
        if seq and _contains(tokens, seq):
            count += 1
    return count


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple
    logprob: float
    plans: tuple
    used: frozenset
    pstate: object = field(repr=False, compare=False)
    rstate: object = field(repr=False, compare=False)
    plan: object = field(default=None, repr=False, compare=False)
    covered: int = 0
    finish: str = ""

    @property
    def selected(self):
        out = []
        for p in self.plans:
            out.extend(p.selected)
        return out

    @property
    def sentence_idx(self):
        return len(self.plans)


@dataclass
class DecodeResult:
    tokens: list
    logprob: float
    covered: int
    plans: list
    finish: str
    fallback: bool = False


def _sentence_start(tokens, eos):
    return not tokens or tokens[-1] == eos


def _mask_enders(lp, eos, eoa):
    lp = np.array(lp, dtype=np.float64)
    lp[[eos, eoa]] = -np.inf
    return lp


def _rank_key(h):
    return (-h.covered, -h.logprob)


def _to_result(h, fallback=False):
    plans = [{"selected": list(p.selected), "label": int(getattr(p, "label", 0))} for p in h.plans]
    return DecodeResult(list(h.tokens), float(h.logprob), h.covered, plans, h.finish, fallback)


def _attach_plan(model, h):
    plan = model.plan(h.pstate, h.used)
    if plan.stop:
        return None
    return replace(
        h,
        plan=plan,
        plans=h.plans + (plan,),
        used=h.used | frozenset(plan.selected),
        pstate=plan.state,
    )


def beam_search(model, width=DEFAULT_WIDTH, max_tokens=DEFAULT_MAX_TOKENS, max_sentences=DEFAULT_MAX_SENTENCES,
                rerank=True, block_repeats=True, fallback=True):
    """Decode one argument; see the module docstring for the model protocol.

    Candidates from every live hypothesis are pooled and the top ``width`` kept
    by log-probability, skipping any that repeat a 4-gram (the next best fills
    the slot). With ``rerank``, the slots taken by end-of-sentence candidates
    go to the end-of-sentence candidates with the most keyphrase coverage
    (then log-probability), and the live set is re-sorted by that key after
    any sentence ends. Search stops once ``width`` hypotheses have finished.
    """
    if width < 1:
        raise InputError("beam width must be >= 1")
    if max_tokens < 1:
        raise InputError("max_tokens must be >= 1")
    ps, rs = model.start()
    live = [Hypothesis((), 0.0, (), frozenset(), ps, rs)]
    completed = []
    eos, eoa = model.eos_id, model.eoa_id
    phrases = model.phrases

    for _ in range(max_tokens):
        ready = []
        for h in live:
            if h.plan is None:
                h2 = _attach_plan(model, h)
                if h2 is None:
                    completed.append(replace(h, finish="planner_stop"))
                    continue
                h = h2
            ready.append(h)
        if not ready:
            live = []
            break

        steps = []
        for h in ready:
            prev = h.tokens[-1] if h.tokens else model.start_id
            rstate, lp = model.step(h.rstate, prev, h.plan)
            if _sentence_start(h.tokens, eos):
                lp = _mask_enders(lp, eos, eoa)
            steps.append((rstate, lp))
        V = len(steps[0][1])
        scores = np.concatenate([h.logprob + np.asarray(lp, dtype=np.float64) for h, (_, lp) in zip(ready, steps)])
        hyp_idx = np.repeat(np.arange(len(ready)), V)
        tok_idx = np.tile(np.arange(V), len(ready))
        order = np.lexsort((tok_idx, hyp_idx, -scores))

        def make(k):
            hi, tok = int(hyp_idx[k]), int(tok_idx[k])
            h = ready[hi]
            toks = h.tokens + (tok,)
            return hi, replace(
                h,
                tokens=toks,
                logprob=float(scores[k]),
                rstate=steps[hi][0],
                covered=coverage(toks, phrases, h.selected),
            )

        chosen = []
        for k in order:
            if not np.isfinite(scores[k]):
                break
            hi, cand = make(k)
            if block_repeats and repeats_ngram(cand.tokens):
                continue
            chosen.append((hi, cand))
            if len(chosen) >= width:
                break

        if not chosen:
            if completed:
                live = []
                break
            if fallback:
                greedy = beam_search(model, 1, max_tokens, max_sentences, rerank=rerank, block_repeats=False, fallback=False)
                if greedy is not None:
                    greedy.fallback = True
                return greedy
            return None

        n_eos = sum(1 for _, c in chosen if c.tokens[-1] == eos)
        if rerank and n_eos:
            eos_pool = []
            for hi in range(len(ready)):
                k = hi * V + eos
                if not np.isfinite(scores[k]):
                    continue
                cand = make(k)[1]
                if not (block_repeats and repeats_ngram(cand.tokens)):
                    eos_pool.append((hi, cand))
            best_eos = sorted(eos_pool, key=lambda hc: (_rank_key(hc[1]), hc[0]))[:n_eos]
            chosen = [hc for hc in chosen if hc[1].tokens[-1] != eos] + best_eos

        new_live = []
        ended = False
        for _, c in chosen:
            tok = c.tokens[-1]
            if tok == eoa:
                completed.append(replace(c, finish="eoa"))
            elif tok == eos:
                ended = True
                if c.sentence_idx >= max_sentences:
                    completed.append(replace(c, finish="max_sentences"))
                else:
                    new_live.append(replace(c, plan=None))
            else:
                new_live.append(c)
        if rerank and ended:
            new_live.sort(key=_rank_key)
        live = new_live
        if len(completed) >= width or not live:
            break
    else:
        completed.extend(replace(h, finish="max_tokens") for h in live)
        live = []

    pool = completed or live
    if not pool:
        return None
    best = min(enumerate(pool), key=lambda ih: (_rank_key(ih[1]), ih[0]))[1]
    return _to_result(best)


def greedy_decode(model, max_tokens=DEFAULT_MAX_TOKENS, max_sentences=DEFAULT_MAX_SENTENCES, block_repeats=True):
    """Straight argmax decoding (ties on the lowest token id), used as a reference."""
    ps, rs = model.start()
    tokens, logprob, plans, used = [], 0.0, [], set()
    plan = None
    finish = "max_tokens"
    for _ in range(max_tokens):
        if plan is None:
            plan = model.plan(ps, frozenset(used))
            if plan.stop:
                finish = "planner_stop"
                break
            plans.append(plan)
            used |= set(plan.selected)
            ps = plan.state
        prev = tokens[-1] if tokens else model.start_id
        rs, lp = model.step(rs, prev, plan)
        lp = np.asarray(lp, dtype=np.float64)
        if _sentence_start(tokens, model.eos_id):
            lp = _mask_enders(lp, model.eos_id, model.eoa_id)
        for tok in np.lexsort((np.arange(len(lp)), -lp)):
            if not np.isfinite(lp[tok]):
                continue
            if not block_repeats or not repeats_ngram(tokens + [int(tok)]):
                break
        else:
            finish = "blocked"
            break
        tok = int(tok)
        tokens.append(tok)
        logprob += float(lp[tok])
        if tok == model.eoa_id:
            finish = "eoa"
            break
        if tok == model.eos_id:
            if len(plans) >= max_sentences:
                finish = "max_sentences"
                break
            plan = None
    selected = [m for p in plans for m in p.selected]
    cov = coverage(tokens, model.phrases, selected)
    plan_recs = [{"selected": list(p.selected), "label": int(getattr(p, "label", 0))} for p in plans]
    return DecodeResult(tokens, logprob, cov, plan_recs, finish)


# ------------------------------------------------------------- model adapter


@dataclass
class _Plan:
    state: object
    selected: tuple
    stop: bool
    label: int
    label_logprobs: object = None
    s: object = None


class ModelStepper:
    """Step-model adapter over a trained ArgumentModel for one input."""

    def __init__(self, model, vocab, input_ids, memory_ids, phrases):
        if not memory_ids:
            raise InputError("generation needs a non-empty keyphrase memory")
        self.model = model
        self.vocab = vocab
        self.start_id = vocab.start_id
        self.eos_id = vocab.eos_id
        self.eoa_id = vocab.eoa_id
        unk = vocab.id("<unk>")
        # a phrase containing an unknown word can never be matched reliably
        self.phrases = [None if (not p or unk in p) else tuple(p) for p in phrases]
        model.training = False
        with nn.no_grad():
            self.enc = model.encode(input_ids)
            self.Mx = model.memory_matrix(memory_ids)
            self.keys = model.attention_keys(self.enc.states)

    def start(self):
        with nn.no_grad():
            ps = self.model.plan_start(self.enc)
        return ps, list(self.enc.final)

    def plan(self, pstate, used):
        with nn.no_grad():
            sp = self.model.plan_step(pstate, self.Mx, used)
        label = int(np.argmax(sp.label_logprobs))
        return _Plan(sp.state, tuple(sp.selected), sp.stop, label, sp.label_logprobs, sp.s)

    def step(self, rstate, prev, plan):
        with nn.no_grad():
            layers, logp, _ = self.model.realize_step(rstate, prev, plan.s, self.enc.states, self.keys)
        return layers, logp.data
