"""Encoder, sentence planner, token realizer, mixed loss, and the training loop."""

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import nncore as nn
from .errors import InputError, InvariantError

PAD, UNK, SEP, START, EOS, EOA = "<pad>", "<unk>", "<sep>", "<start>", "<eos>", "<eoa>"
SPECIALS = (PAD, UNK, SEP, START, EOS, EOA)
DEFAULT_VOCAB_SIZE = 50000


class Vocab:
    """Token <-> id map; specials first, then tokens by descending frequency, ties alphabetical."""

    def __init__(self, tokens):
        self.itos = list(tokens)
        if tuple(self.itos[: len(SPECIALS)]) != SPECIALS:
            raise InputError("vocabulary must start with the special tokens")
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise InputError("vocabulary has duplicate tokens")

    @classmethod
    def build(cls, token_lists, max_size=DEFAULT_VOCAB_SIZE):
        counts = Counter()
        for toks in token_lists:
            counts.update(t for t in toks if t not in SPECIALS)
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(list(SPECIALS) + [t for t, _ in ranked[:max_size]])

    def __len__(self):
        return len(self.itos)

    def __contains__(self, tok):
        return tok in self.stoi

    def id(self, tok):
        return self.stoi.get(tok, self.stoi[UNK])

    def ids(self, toks):
        unk = self.stoi[UNK]
        return [self.stoi.get(t, unk) for t in toks]

    def token(self, i):
        return self.itos[i]

    def tokens(self, ids):
        return [self.itos[i] for i in ids]

    @property
    def pad_id(self):
        return self.stoi[PAD]

    @property
    def sep_id(self):
        return self.stoi[SEP]

    @property
    def start_id(self):
        return self.stoi[START]

    @property
    def eos_id(self):
        return self.stoi[EOS]

    @property
    def eoa_id(self):
        return self.stoi[EOA]


def pair_tokens(pair):
    """Every token of a TrainingPair that should be in the vocabulary."""
    out = list(pair.statement)
    for p in pair.passages:
        out.extend(p)
    for s in pair.argument:
        out.extend(s)
    for m in pair.memory:
        out.extend(m["tokens"])
    return out


@dataclass
class ModelConfig:
    vocab_size: int
    embed_dim: int = 300
    hidden: int = 512
    layers: int = 2
    dropout: float = 0.2
    gamma: float = 1.0
    eta: float = 1.0
    max_sentences: int = 10
    init_scale: float = 0.1
    embed_init_scale: float = 0.1

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InputError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EncodedPair:
    """A TrainingPair mapped to ids."""

    pair_id: str
    input_ids: list
    memory_ids: list
    sentences: list  # list of id lists, one per gold sentence
    labels: list  # 0 filler / 1 content per sentence
    selection: list  # per sentence, sorted memory indices


def flatten_target(sentences, eos_id, eoa_id):
    """s1 <eos> s2 <eos> ... sn <eoa> plus the sentence index (1-based) of each token."""
    out, js = [], []
    for j, sent in enumerate(sentences, 1):
        out.extend(sent)
        js.extend([j] * len(sent))
        out.append(eoa_id if j == len(sentences) else eos_id)
        js.append(j)
    return out, js


def build_encoder_input(statement_ids, passage_id_lists, sep_id):
    ids = list(statement_ids) + [sep_id]
    for k, p in enumerate(passage_id_lists):
        if k:
            ids.append(sep_id)
        ids.extend(p)
    return ids


def encode_pair(pair, vocab):
    labels = [1 if lab == "Content" else 0 for lab in pair.labels]
    # selection[0] is the start step; sentences use entries 1..n
    selection = [list(s) for s in pair.selection[1:]]
    if len(selection) != len(pair.argument) or len(labels) != len(pair.argument):
        raise InputError(f"pair {pair.pair_id}: label counts do not match the argument's sentences")
    return EncodedPair(
        pair_id=pair.pair_id,
        input_ids=build_encoder_input(vocab.ids(pair.statement), [vocab.ids(p) for p in pair.passages], vocab.sep_id),
        memory_ids=[vocab.ids(m["tokens"]) for m in pair.memory],
        sentences=[vocab.ids(s) for s in pair.argument],
        labels=labels,
        selection=selection,
    )


@dataclass
class EncoderOutput:
    states: object  # Tensor (n, 2H)
    final: list  # per decoder layer (h, c) after the bridge


@dataclass
class PlannerState:
    layers: list  # per-layer (h, c)

    @property
    def s(self):
        return self.layers[-1][0]


@dataclass
class SentencePlan:
    state: PlannerState
    alpha: np.ndarray
    selected: tuple
    label_logprobs: np.ndarray
    stop: bool = False

    @property
    def s(self):
        return self.state.s


@dataclass
class LossTerms:
    total: object
    arg: float
    func: float
    sel: float
    n_tokens: int
    alphas: list = field(default_factory=list)


def select_keyphrases(alpha, used=()):
    """Inference selection: {alpha > 0.5} plus the argmax, minus used entries.

    The argmax breaks ties on the lowest index. If every chosen entry was
    already used, fall back to the best unused one; once the whole memory is
    used the selection is empty (the planner is fed a zero vector).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    used = set(used)
    top = int(np.argmax(alpha))
    chosen = {int(m) for m in np.flatnonzero(alpha > 0.5)} | {top}
    chosen -= used
    if chosen:
        return tuple(sorted(chosen))
    unused = [m for m in range(len(alpha)) if m not in used]
    if not unused:
        return ()
    return (max(unused, key=lambda m: (alpha[m], -m)),)


class ArgumentModel:
    """biLSTM encoder, LSTM sentence planner, LSTM realizer with encoder attention."""

    def __init__(self, config, seed=0):
        self.config = config
        self.params = nn.ParamStore(seed, config.init_scale)
        self.rng = np.random.default_rng([seed, 1])
        self.training = False
        c = config
        E, H, D, L, V = c.embed_dim, c.hidden, c.hidden, c.layers, c.vocab_size
        p = self.params
        p.add("embed", (V, E), scale=c.embed_init_scale)
        for d in ("fwd", "bwd"):
            for k in range(L):
                ins = E if k == 0 else 2 * H
                p.add(f"enc.{d}.{k}.W", (4 * H, ins + H))
                p.add(f"enc.{d}.{k}.b", (4 * H,), "bias")
        for k in range(L):
            for part in ("h", "c"):
                p.add(f"bridge.{part}.{k}.W", (D, 2 * H))
                p.add(f"bridge.{part}.{k}.b", (D,), "bias")
        for k in range(L):
            ins = E if k == 0 else D
            p.add(f"plan.{k}.W", (4 * D, ins + D))
            p.add(f"plan.{k}.b", (4 * D,), "bias")
        p.add("plan.start", (E,))
        p.add("plan.W_pa", (E, D))
        p.add("plan.W_po", (D, E + D))
        p.add("plan.w_p", (2, D))
        p.add("plan.b_p", (2,), "bias")
        for k in range(L):
            p.add(f"real.{k}.W", (4 * D, D + D))
            p.add(f"real.{k}.b", (4 * D,), "bias")
        p.add("real.W_wp", (D, D))
        p.add("real.W_ww", (D, E))
        p.add("real.b_w", (D,), "bias")
        p.add("real.W_wa", (2 * H, D))
        p.add("real.W_wo", (D, 2 * H + D))
        p.add("real.W_out", (V, D))
        p.add("real.b_o", (V,), "bias")

    # -- helpers

    def _layers(self, prefix):
        return [(self.params[f"{prefix}.{k}.W"], self.params[f"{prefix}.{k}.b"]) for k in range(self.config.layers)]

    def _zero_state(self, n):
        return [(nn.tensor(np.zeros(n)), nn.tensor(np.zeros(n))) for _ in range(self.config.layers)]

    def _check_ids(self, ids, what):
        V = self.config.vocab_size
        for i in ids:
            if not 0 <= i < V:
                raise InputError(f"{what}: token id {i} outside vocabulary of size {V}")

    # -- encoder

    def _run_direction(self, xs, layer):
        W, b = layer
        H = self.config.hidden
        h, c = nn.tensor(np.zeros(H)), nn.tensor(np.zeros(H))
        outs = []
        for x in xs:
            h, c = nn.lstm_step(x, h, c, W, b)
            outs.append(h)
        return outs, (h, c)

    def encode(self, input_ids):
        if not input_ids:
            raise InputError("encoder input is empty")
        self._check_ids(input_ids, "encoder input")
        emb = nn.embedding(self.params["embed"], input_ids)
        xs = [emb[i] for i in range(len(input_ids))]
        finals = []
        for k in range(self.config.layers):
            if k > 0:
                xs = [nn.dropout(x, self.config.dropout, self.training, self.rng) for x in xs]
            fwd, (hf, cf) = self._run_direction(xs, (self.params[f"enc.fwd.{k}.W"], self.params[f"enc.fwd.{k}.b"]))
            bwd_rev, (hb, cb) = self._run_direction(
                xs[::-1], (self.params[f"enc.bwd.{k}.W"], self.params[f"enc.bwd.{k}.b"])
            )
            bwd = bwd_rev[::-1]
            xs = [nn.concat([f, b]) for f, b in zip(fwd, bwd)]
            finals.append((nn.concat([hf, hb]), nn.concat([cf, cb])))
        bridged = []
        for k, (h2, c2) in enumerate(finals):
            h = nn.add(nn.matmul(self.params[f"bridge.h.{k}.W"], h2), self.params[f"bridge.h.{k}.b"])
            c = nn.add(nn.matmul(self.params[f"bridge.c.{k}.W"], c2), self.params[f"bridge.c.{k}.b"])
            bridged.append((h, c))
        return EncoderOutput(nn.stack(xs), bridged)

    # -- planner

    def memory_matrix(self, memory_ids):
        if not memory_ids:
            return None
        for ids in memory_ids:
            self._check_ids(ids, "keyphrase memory")
        return nn.embedding_bag(self.params["embed"], memory_ids)

    def _plan_advance(self, state, inp):
        layers = nn.lstm_stack_step(
            inp, state.layers, self._layers("plan"), self.config.dropout, self.training, self.rng
        )
        return PlannerState(layers)

    def plan_start(self, enc):
        """s_0: one planner step from the bridged encoder state on the start-marker vector."""
        return self._plan_advance(PlannerState(list(enc.final)), self.params["plan.start"])

    def plan_alpha(self, Mx, s_prev):
        """alpha_m = sigmoid(e_m W_pa s_{j-1}) for every memory entry."""
        return nn.sigmoid(nn.matmul(Mx, nn.matmul(self.params["plan.W_pa"], s_prev)))

    def plan_label_logits(self, alpha, Mx, s):
        E = self.config.embed_dim
        ctx = nn.matmul(alpha, Mx) if Mx is not None else nn.tensor(np.zeros(E))
        hid = nn.tanh(nn.matmul(self.params["plan.W_po"], nn.concat([ctx, s])))
        return nn.add(nn.matmul(self.params["plan.w_p"], hid), self.params["plan.b_p"])

    def _bag_input(self, Mx, chosen):
        if Mx is None or not chosen:
            return nn.tensor(np.zeros(self.config.embed_dim))
        idx = np.asarray(sorted(chosen), dtype=np.int64)
        rows = Mx[idx]
        if len(idx) == 1:
            return rows[0]
        return nn.matmul(nn.tensor(np.ones(len(idx))), rows)

    def plan_step(self, state, Mx, used):
        """Inference planning step: choose keyphrases, advance s, predict the function label."""
        if Mx is None or Mx.shape[0] == 0:
            raise InputError("keyphrase memory is empty")
        alpha = self.plan_alpha(Mx, state.s)
        chosen = select_keyphrases(alpha.data, used)
        new = self._plan_advance(state, self._bag_input(Mx, chosen))
        logp = nn.log_softmax(self.plan_label_logits(alpha, Mx, new.s))
        return SentencePlan(new, alpha.data.copy(), chosen, logp.data.copy())

    # -- realizer

    def attention_keys(self, enc_states):
        """Henc @ W_wa, computed once per input so each step needs one product with z."""
        return nn.matmul(enc_states, self.params["real.W_wa"])

    def realize_step(self, state, prev_id, s_plan, enc_states, keys=None):
        """One token step; returns (layer states, log-probabilities Tensor over the vocabulary, beta)."""
        if s_plan is None:
            raise InvariantError("realize_step called without a sentence plan")
        p = self.params
        y_prev = nn.embedding(p["embed"], prev_id)
        u = nn.tanh(
            nn.add(
                nn.add(nn.matmul(p["real.W_wp"], s_plan), nn.matmul(p["real.W_ww"], y_prev)),
                p["real.b_w"],
            )
        )
        layers = nn.lstm_stack_step(u, state, self._layers("real"), self.config.dropout, self.training, self.rng)
        z = layers[-1][0]
        if keys is None:
            keys = self.attention_keys(enc_states)
        beta = nn.softmax(nn.matmul(keys, z))
        ctx = nn.matmul(beta, enc_states)
        hid = nn.tanh(nn.matmul(p["real.W_wo"], nn.concat([ctx, z])))
        logits = nn.add(nn.matmul(p["real.W_out"], hid), p["real.b_o"])
        return layers, nn.log_softmax(logits), beta

    # -- loss

    def compute_loss(self, ep, vocab_ids):
        """Teacher-forced mixed loss for one EncodedPair.

        ``vocab_ids`` supplies (start_id, eos_id, eoa_id). Returns LossTerms
        whose ``total`` Tensor is L_arg + gamma * L_func + eta * L_sel.
        """
        start_id, eos_id, eoa_id = vocab_ids
        n = len(ep.sentences)
        if n == 0:
            raise InputError(f"pair {ep.pair_id} has no argument sentences")
        enc = self.encode(ep.input_ids)
        Mx = self.memory_matrix(ep.memory_ids)
        n_mem = 0 if Mx is None else Mx.shape[0]

        # planner: s_0 .. s_n
        state = self.plan_start(enc)
        plans = [state]
        func_terms, sel_terms, alphas = [], [], []
        for j in range(1, n + 1):
            gold = [m for m in ep.selection[j - 1] if m < n_mem]
            if len(gold) != len(ep.selection[j - 1]):
                raise InputError(f"pair {ep.pair_id}: selection index outside memory")
            alpha = self.plan_alpha(Mx, state.s) if Mx is not None else None
            state = self._plan_advance(state, self._bag_input(Mx, gold))
            plans.append(state)
            lp = nn.log_softmax(self.plan_label_logits(alpha, Mx, state.s))
            func_terms.append(lp[ep.labels[j - 1]])
            if alpha is not None:
                y = np.zeros(n_mem)
                y[gold] = 1.0
                alphas.append(alpha.data.copy())
                pos = nn.mul(nn.tensor(y), nn.log(alpha))
                negt = nn.mul(nn.tensor(1.0 - y), nn.log(nn.sub(nn.tensor(np.ones(n_mem)), alpha)))
                sel_terms.append(nn.sum(nn.add(pos, negt)))

        # realizer
        target, js = flatten_target(ep.sentences, eos_id, eoa_id)
        rstate = list(enc.final)
        keys = self.attention_keys(enc.states)
        prev = start_id
        arg_terms = []
        for tok, j in zip(target, js):
            rstate, logp, _ = self.realize_step(rstate, prev, plans[j].s, enc.states, keys)
            arg_terms.append(logp[tok])
            prev = tok

        L_arg = nn.neg(nn.add_all(arg_terms))
        L_func = nn.neg(nn.add_all(func_terms))
        terms = [L_arg, nn.mul(L_func, self.config.gamma)]
        L_sel_val = 0.0
        if sel_terms:
            L_sel = nn.neg(nn.add_all(sel_terms))
            terms.append(nn.mul(L_sel, self.config.eta))
            L_sel_val = L_sel.item()
        total = nn.add_all(terms)
        return LossTerms(total, L_arg.item(), L_func.item(), L_sel_val, len(target), alphas)

    # -- persistence

    def state(self):
        return self.params.state()

    def load_state(self, state):
        self.params.load_state(state)


def reference_selection_loss(alphas, selections, eps=1e-12):
    """Plain-float binary cross-entropy over logged alphas (test oracle helper)."""
    total = 0.0
    for alpha, chosen in zip(alphas, selections):
        chosen = set(chosen)
        for m, a in enumerate(alpha):
            a = float(a)
            if m in chosen:
                total -= math.log(max(a, eps))
            else:
                total -= math.log(max(1.0 - a, eps))
    return total


# ------------------------------------------------------------------ training


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    lr: float = 0.15
    initial_accumulator: float = 0.1
    clip_norm: float = 2.0
    patience: int = 3
    target_perplexity: float = 0.0  # stop early once validation perplexity drops below this (0 = off)


class TrainingDiverged(InvariantError):
    pass


def perplexity(model, encoded, vocab_ids):
    """exp(mean token negative log-likelihood) under teacher forcing, no dropout."""
    was = model.training
    model.training = False
    nll, n = 0.0, 0
    with nn.no_grad():
        for ep in encoded:
            terms = model.compute_loss(ep, vocab_ids)
            nll += terms.arg
            n += terms.n_tokens
    model.training = was
    if n == 0:
        raise InputError("perplexity needs at least one target token")
    return math.exp(nll / n)


def train(model, train_pairs, val_pairs, vocab_ids, cfg, seed=0, on_epoch=None, dump_path=None):
    """Adagrad training with seeded shuffling and early stopping on validation perplexity.

    Returns (log, best_state). ``log`` holds one dict per epoch. The model is
    left holding the best parameters seen.
    """
    if not train_pairs:
        raise InputError("training set is empty")
    val_pairs = val_pairs or train_pairs
    rng = np.random.default_rng(seed)
    opt = nn.Adagrad(model.params, cfg.lr, cfg.initial_accumulator, cfg.clip_norm)
    best, best_state, bad = math.inf, model.state(), 0
    log = []
    for epoch in range(1, cfg.epochs + 1):
        model.training = True
        order = rng.permutation(len(train_pairs))
        sums = {"loss": 0.0, "arg": 0.0, "func": 0.0, "sel": 0.0}
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            model.params.zero_grad()
            for i in batch:
                terms = model.compute_loss(train_pairs[i], vocab_ids)
                value = terms.total.item()
                if not math.isfinite(value):
                    _dump(dump_path, epoch, train_pairs[i].pair_id, terms)
                    raise TrainingDiverged(f"non-finite loss at epoch {epoch}, pair {train_pairs[i].pair_id}")
                nn.backward(nn.mul(terms.total, 1.0 / len(batch)))
                sums["loss"] += value
                sums["arg"] += terms.arg
                sums["func"] += terms.func
                sums["sel"] += terms.sel
            try:
                opt.step()
            except FloatingPointError as exc:
                _dump(dump_path, epoch, None, None)
                raise TrainingDiverged(str(exc)) from None
        model.training = False
        val_ppl = perplexity(model, val_pairs, vocab_ids)
        n = len(train_pairs)
        rec = {"epoch": epoch, **{f"train_{k}": v / n for k, v in sums.items()}, "val_perplexity": val_ppl}
        log.append(rec)
        if on_epoch:
            on_epoch(rec)
        if val_ppl < best:
            best, best_state, bad = val_ppl, model.state(), 0
        else:
            bad += 1
        if cfg.target_perplexity and val_ppl < cfg.target_perplexity:
            break
        if bad >= cfg.patience:
            break
    model.load_state(best_state)
    return log, best_state


def _dump(path, epoch, pair_id, terms):
    if not path:
        return
    rec = {"epoch": epoch, "pair_id": pair_id}
    if terms is not None:
        rec.update({"arg": terms.arg, "func": terms.func, "sel": terms.sel})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rec, fh, sort_keys=True, default=str)


# ---------------------------------------------------------------- checkpoint


def save_model(path, model, vocab, extra=None):
    meta = {"config": model.config.to_dict(), "vocab": vocab.itos, "extra": extra or {}}
    nn.save_checkpoint(path, model.state(), meta)


def load_model(path):
    arrays, meta = nn.load_checkpoint(path)
    try:
        config = ModelConfig.from_dict(meta["config"])
        vocab = Vocab(meta["vocab"])
    except KeyError as exc:
        raise InputError(f"checkpoint metadata lacks {exc}", path) from None
    model = ArgumentModel(config)
    model.load_state(arrays)
    return model, vocab, meta.get("extra", {})
