"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 1 rejected input, 2 internal invariant violation,
64 usage error (unknown flag, missing argument).
"""

import argparse
import contextlib
import hashlib
import json
import os
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__, argmodel, dataprep, evalkit, nncore, pipeline, plots
from .config import load_config, stage_seed
from .corpus_index import Article, Index, build_index, ingest, segment
from .errors import InputError, InvariantError
from .textproc import split_sentences, tokenize

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2, 64

COMMANDS = ("ingest", "segment", "index", "retrieve", "rank", "keyphrases", "prep", "train", "generate",
            "evaluate", "gradcheck")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


# ------------------------------------------------------------------- io


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    """Write to ``path + '.partial'`` and rename into place only on success."""
    tmp = f"{path}.partial"
    kwargs = {"encoding": "utf-8"} if "b" not in mode else {}
    fh = open(tmp, mode, **kwargs)
    try:
        yield fh
    except BaseException:
        fh.close()
        with contextlib.suppress(OSError):
            os.remove(tmp)
        raise
    fh.close()
    os.replace(tmp, path)


def dumps(obj):
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def write_jsonl(path, records):
    with atomic_write(path) as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_jsonl(path, required=()):
    out = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read input: {exc.strerror}", path) from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"invalid JSON ({exc.msg})", path, lineno) from None
            if not isinstance(rec, dict):
                raise InputError("record is not an object", path, lineno)
            missing = [k for k in required if k not in rec]
            if missing:
                raise InputError(f"missing field(s) {', '.join(missing)}", path, lineno)
            out.append(rec)
    return out


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _need(value, flag):
    if not value:
        raise InputError(f"{flag} is required for this command")
    return value


def _load_index(args, cfg):
    path = args.index or cfg.index
    if not path:
        return None
    try:
        return Index.load(path)
    except OSError as exc:
        raise InputError(f"cannot read index: {exc.strerror}", path) from None


# --------------------------------------------------------------- stages


def cmd_ingest(args, cfg, ctx):
    """Read raw article records (JSONL) and split them into sentences, rejecting bad ones."""
    path = _need(args.input, "--input")
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read input: {exc.strerror}", path) from None
    media = frozenset([args.medium]) if args.medium else cfg.media_set
    articles, rejections = ingest(lines, media=media)
    write_jsonl(args.output, [pipeline.article_to_record(a) for a in articles])
    write_jsonl(f"{args.output}.rejections.jsonl", rejections)
    ctx["counts"] = {"articles": len(articles), "rejected": len(rejections)}


def cmd_segment(args, cfg, ctx):
    """Cut articles into overlapping passages of consecutive sentences."""
    recs = read_jsonl(_need(args.input, "--input"), ("id", "medium", "text"))
    out = []
    for rec in recs:
        art = Article(rec["id"], rec["medium"], rec.get("date"), rec["text"], split_sentences(rec["text"]))
        out.extend(pipeline.passage_to_record(p) for p in segment(art))
    write_jsonl(args.output, out)
    ctx["counts"] = {"articles": len(recs), "passages": len(out)}


def cmd_index(args, cfg, ctx):
    """Build the binary BM25 index over a passage file."""
    recs = read_jsonl(_need(args.input, "--input"), ("pid", "tokens"))
    index = build_index([pipeline.passage_from_record(r) for r in recs], cfg.bm25_k1, cfg.bm25_b)
    with atomic_write(args.output, "wb") as fh:
        fh.write(index.to_bytes())
    ctx["counts"] = {"passages": index.N, "terms": len(index.postings)}


def cmd_retrieve(args, cfg, ctx):
    """Retrieve candidate passages for each statement."""
    index = _load_index(args, cfg)
    if index is None:
        raise InputError("retrieve needs --index (or index= in the config)")
    background = pipeline.index_background(index)
    out = []
    for rec in read_jsonl(_need(args.input, "--input"), ("id", "statement")):
        sents = split_sentences(pipeline.statement_text(rec))
        if args.oracle and rec.get("argument"):
            sents = sents + split_sentences(rec["argument"])
        cands = pipeline.retrieve_candidates(index, sents, cfg.topk, args.medium)
        view = pipeline.analyze_statement(rec["statement"], background, cfg.llr_threshold)
        rec = dict(rec)
        rec["candidates"] = [pipeline.passage_to_record(p, s) for p, s in cands]
        rec["signatures"] = view.signatures
        rec["expanded"] = sorted(view.expanded)
        out.append(rec)
    write_jsonl(args.output, out)
    ctx["counts"] = {"statements": len(out)}


def _view_from_record(rec):
    from . import ranker, resources
    from .textproc import extract_keyphrases

    sents = split_sentences(pipeline.statement_text(rec))
    expanded = set(rec.get("expanded", []))
    kps = extract_keyphrases(sents, expanded)
    targets = ranker.StanceTargets.from_keyphrases(kps, resources.load_sentiment_lexicon())
    return pipeline.StatementView(sents, [t for s in sents for t in s.tokens], list(rec.get("signatures", [])),
                                  expanded, kps, targets)


def replies_background(recs):
    """Word counts over every gold argument in a file: the background for argument signatures."""
    bg = Counter()
    for rec in recs:
        arg = rec.get("argument")
        if isinstance(arg, str):
            bg.update(t.lower for t in tokenize(arg))
    return bg


def cmd_rank(args, cfg, ctx):
    """Rank candidates by statement overlap and filter them, or rerank with the gold argument (--oracle)."""
    out = []
    notes = Counter()
    recs = read_jsonl(_need(args.input, "--input"), ("id", "statement", "candidates"))
    bg = replies_background(recs) if args.oracle else None
    for rec in recs:
        view = _view_from_record(rec)
        cands = [(pipeline.passage_from_record(c), c.get("score", 0.0)) for c in rec["candidates"]]
        gold, arg_sigs = None, ()
        if args.oracle:
            gold = rec.get("argument")
            if not gold:
                raise InputError(f"--oracle needs a gold 'argument' in record {rec['id']!r}")
            arg_sigs = pipeline.argument_signatures(gold, bg, cfg.llr_threshold)
        ranked, q, note = pipeline.rank_candidates(cands, view, cfg, gold, arg_sigs)
        if note:
            notes[note] += 1
        rec = {k: v for k, v in rec.items() if k != "candidates"}
        rec["ranked"] = pipeline.ranked_to_records(ranked)
        rec["statement_q"] = q
        rec["oracle"] = bool(args.oracle)
        out.append(rec)
    write_jsonl(args.output, out)
    ctx["counts"] = {"statements": len(out), **notes}


def cmd_keyphrases(args, cfg, ctx):
    """Extract the keyphrase memory from ranked passages."""
    out = []
    for rec in read_jsonl(_need(args.input, "--input"), ("id", "ranked")):
        ranked = pipeline.ranked_from_records(rec["ranked"])
        _, pids, memory = dataprep.build_memory(ranked, set(rec.get("expanded", [])), cfg.max_passage_tokens)
        rec = dict(rec)
        rec["memory"] = memory
        rec["memory_passages"] = pids
        out.append(rec)
    write_jsonl(args.output, out)
    ctx["counts"] = {"statements": len(out), "keyphrases": sum(len(r["memory"]) for r in out)}


def cmd_prep(args, cfg, ctx):
    """Assemble training pairs with function and selection labels."""
    pairs, skipped = [], []
    recs = read_jsonl(_need(args.input, "--input"), ("id", "statement", "ranked"))
    bg = replies_background(recs)
    for rec in recs:
        view = _view_from_record(rec)
        ranked = pipeline.ranked_from_records(rec["ranked"])
        arg = rec.get("argument")
        if not isinstance(arg, str) or not arg.strip():
            skipped.append({"id": rec["id"], "reason": "empty_argument"})
            continue
        pair, reason = dataprep.assemble_pair(
            rec["id"], view.sentences, ranked, split_sentences(arg), view.expanded,
            statement_signatures=view.signatures, argument_signatures=pipeline.argument_signatures(arg, bg, cfg.llr_threshold),
            caps=(cfg.max_statement_tokens, cfg.max_passage_tokens, cfg.max_argument_tokens),
        )
        if pair is None:
            skipped.append({"id": rec["id"], "reason": reason})
        else:
            pairs.append(pair)
    write_jsonl(args.output, [p.to_record() for p in pairs])
    write_jsonl(f"{args.output}.skipped.jsonl", skipped)
    ctx["counts"] = {"pairs": len(pairs), "skipped": len(skipped)}


def split_pairs(pairs, fraction, seed):
    """Seeded train/validation split; small sets validate on the training data."""
    n_val = int(round(fraction * len(pairs)))
    if len(pairs) < 10 or n_val == 0:
        return list(pairs), list(pairs)
    perm = np.random.default_rng(seed).permutation(len(pairs))
    val_idx = set(perm[:n_val].tolist())
    return [p for i, p in enumerate(pairs) if i not in val_idx], [p for i, p in enumerate(pairs) if i in val_idx]


def cmd_train(args, cfg, ctx):
    """Train the generator; writes a checkpoint and per-epoch metrics."""
    path = _need(args.input, "--input")
    pairs = dataprep.read_pairs(path)
    if not pairs:
        raise InputError("no training pairs", path)
    train_raw, val_raw = split_pairs(pairs, cfg.val_fraction, stage_seed(cfg.seed, "split"))
    counts = Counter()
    for p in train_raw:
        counts.update(argmodel.pair_tokens(p))
    vocab = argmodel.Vocab.build([argmodel.pair_tokens(p) for p in train_raw], cfg.vocab_size)
    mcfg = argmodel.ModelConfig(
        vocab_size=len(vocab), embed_dim=cfg.embed_dim, hidden=cfg.hidden, layers=cfg.layers, dropout=cfg.dropout,
        gamma=cfg.gamma, eta=cfg.eta, max_sentences=cfg.max_sentences, init_scale=cfg.init_scale,
        embed_init_scale=cfg.embed_init_scale,
    )
    model = argmodel.ArgumentModel(mcfg, seed=stage_seed(cfg.seed, "init"))
    if cfg.word_vectors:
        _load_vectors(model, vocab, cfg.word_vectors)
    tcfg = argmodel.TrainConfig(
        epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr, initial_accumulator=cfg.initial_accumulator,
        clip_norm=cfg.clip_norm, patience=cfg.patience, target_perplexity=cfg.target_perplexity,
    )
    ids = (vocab.start_id, vocab.eos_id, vocab.eoa_id)
    train_enc = [argmodel.encode_pair(p, vocab) for p in train_raw]
    val_enc = [argmodel.encode_pair(p, vocab) for p in val_raw]
    metrics_path = f"{args.output}.metrics.jsonl"
    log, _ = argmodel.train(model, train_enc, val_enc, ids, tcfg, seed=stage_seed(cfg.seed, "shuffle"),
                            dump_path=f"{args.output}.diverged.json")
    write_jsonl(metrics_path, log)
    extra = {"train_counts": dict(sorted(counts.items())), "epochs_run": len(log),
             "best_val_perplexity": min(r["val_perplexity"] for r in log)}
    argmodel.save_model(args.output, model, vocab, extra)
    ctx["counts"] = {"train_pairs": len(train_enc), "val_pairs": len(val_enc), "epochs": len(log),
                     "vocab": len(vocab)}


def _load_vectors(model, vocab, path):
    from .textproc import WordVectors

    vecs = WordVectors.load(path)
    table = model.params["embed"]
    if vecs.dim != table.shape[1]:
        raise InputError(f"word vectors have dimension {vecs.dim}, model expects {table.shape[1]}", path)
    for i, tok in enumerate(vocab.itos):
        if tok in vecs:
            table.data[i] = vecs.get(tok)


def cmd_generate(args, cfg, ctx):
    """Generate a counter-argument for each statement."""
    ckpt = _need(args.checkpoint, "--checkpoint")
    model, vocab, _ = argmodel.load_model(ckpt)
    index = _load_index(args, cfg)
    if index is None:
        raise InputError("generate needs --index (or index= in the config)")
    background = pipeline.index_background(index)
    out = []
    failures = 0
    for rec in read_jsonl(_need(args.input, "--input"), ("id", "statement")):
        view = pipeline.analyze_statement(pipeline.statement_text(rec), background, cfg.llr_threshold)
        cands = pipeline.retrieve_candidates(index, view.sentences, cfg.topk, args.medium)
        ranked, _, note = pipeline.rank_candidates(cands, view, cfg)
        row = {"id": rec["id"], "statement": rec["statement"]}
        if rec.get("argument"):
            row["argument"] = rec["argument"]
        if not ranked:
            row["error"] = "no passages survived ranking"
            failures += 1
        else:
            try:
                row.update(pipeline.generate_one(model, vocab, view, ranked, cfg))
            except InputError as exc:
                row["error"] = str(exc)
                failures += 1
        if note:
            row["note"] = note
        out.append(row)
    write_jsonl(args.output, out)
    ctx["counts"] = {"statements": len(out), "failed": failures}


def cmd_evaluate(args, cfg, ctx):
    """Score generations against references; writes a report table and figures."""
    records = []
    for rec in read_jsonl(_need(args.input, "--input"), ("id",)):
        if "error" in rec or not rec.get("argument"):
            continue
        hyp = rec.get("tokens")
        if hyp is None:
            hyp = [t.lower for t in tokenize(rec.get("text", ""))]
        ref = [t.lower for t in tokenize(rec["argument"])]
        item = {"id": rec["id"], "hyp": [h.lower() for h in hyp], "ref": ref}
        if "sentences" in rec:
            item["sentences"] = len(rec["sentences"])
        records.append(item)
    if not records:
        raise InputError("no records with both a generation and a reference argument", args.input)
    freqs = None
    if args.checkpoint:
        _, _, extra = argmodel.load_model(args.checkpoint)
        freqs = Counter(extra.get("train_counts", {}))
    per_pair, summary = evalkit.evaluate(records, freqs, cfg.ks)
    write_jsonl(args.output, per_pair + [{"summary": summary}])
    with atomic_write(f"{args.output}.table.txt") as fh:
        fh.write(evalkit.format_table(summary))
    stem = str(Path(args.output).with_suffix(""))
    plots.plot_distinct(summary["distinct"], f"{stem}.distinct.png")
    figures = [f"{stem}.distinct.png"]
    if "uncommon_fraction" in summary:
        plots.plot_uncommon(summary["uncommon_fraction"], f"{stem}.uncommon.png")
        figures.append(f"{stem}.uncommon.png")
    ctx["counts"] = {"pairs": len(per_pair)}
    ctx["figures"] = figures


def tiny_gradcheck(seed, per_param=3):
    """Finite-difference check of the full mixed loss on a tiny random model and pair."""
    rng = np.random.default_rng(seed)
    cfg = argmodel.ModelConfig(vocab_size=20, embed_dim=8, hidden=8, dropout=0.0)
    model = argmodel.ArgumentModel(cfg, seed=seed)
    ep = argmodel.EncodedPair(
        pair_id=f"tiny{seed}",
        input_ids=[int(i) for i in rng.integers(6, 20, size=9)],
        memory_ids=[[int(i) for i in rng.integers(6, 20, size=int(rng.integers(1, 4)))] for _ in range(4)],
        sentences=[[int(i) for i in rng.integers(6, 20, size=4)] for _ in range(2)],
        labels=[1, 0],
        selection=[sorted({0, int(rng.integers(1, 4))}), [int(rng.integers(0, 4))]],
    )
    ids = (3, 4, 5)
    return nncore.gradcheck(lambda: model.compute_loss(ep, ids).total, model.params, per_param=per_param,
                            rng=np.random.default_rng([seed, 7]))


def cmd_gradcheck(args, cfg, ctx):
    """Finite-difference check of the full loss on a tiny random model."""
    seed = stage_seed(cfg.seed, "gradcheck")
    report = tiny_gradcheck(seed)
    rows = {k: {"rel_err": v[0], "abs_err": v[1], "analytic": v[2], "numeric": v[3], "passed": bool(v[4])}
            for k, v in report.items()}
    failed = sorted(k for k, v in rows.items() if not v["passed"])
    text = dumps({"seed": seed, "groups": rows, "failed": failed}) + "\n"
    if args.output:
        with atomic_write(args.output) as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    ctx["counts"] = {"groups": len(rows), "failed": len(failed)}
    if failed:
        raise InvariantError(f"gradient check failed for: {', '.join(failed)}")


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


# ------------------------------------------------------------------ main


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--input", help="input file")
    common.add_argument("--output", help="output file")
    common.add_argument("--medium", help="restrict to one medium")
    common.add_argument("--topk", type=int, help="passages per query")
    common.add_argument("--beam", type=int, help="beam width")
    common.add_argument("--checkpoint", help="model checkpoint")
    common.add_argument("--oracle", action="store_true", help="use the gold argument in each record")
    common.add_argument("--max-tokens", dest="max_tokens", type=int, help="generation length cap")
    common.add_argument("--index", help="index file (overrides index= in the config)")
    parser = _Parser(prog="counterarg", description="Retrieval-grounded counter-argument generation pipeline.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=(HANDLERS[name].__doc__ or name).split("\n")[0])
    return parser


def write_manifest(args, cfg, ctx, timings, status):
    target = args.output or f"{args.command}"
    inputs = {}
    for flag in ("input", "checkpoint", "index", "config"):
        path = getattr(args, flag, None) or (cfg.index if flag == "index" and cfg else None)
        if path and os.path.isfile(path):
            inputs[flag] = {"path": str(path), "sha256": file_digest(path)}
    outputs = {}
    if args.output and os.path.isfile(args.output):
        outputs["output"] = {"path": str(args.output), "sha256": file_digest(args.output)}
    manifest = {
        "command": args.command,
        "version": __version__,
        "seed": cfg.seed if cfg else None,
        "config": cfg.to_dict() if cfg else None,
        "flags": {k: v for k, v in vars(args).items() if k != "command"},
        "inputs": inputs,
        "outputs": outputs,
        "timings_s": timings,
        "status": status,
        **{k: v for k, v in ctx.items()},
    }
    with atomic_write(f"{target}.manifest.json") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    if args.command != "gradcheck" and not args.output:
        sys.stderr.write(f"counterarg {args.command}: --output is required\n")
        return EXIT_USAGE
    cfg = None
    ctx = {}
    timings = {}
    status = "ok"
    code = EXIT_OK
    t0 = time.perf_counter()
    try:
        overrides = {"seed": args.seed, "topk": args.topk, "beam": args.beam, "max_tokens": args.max_tokens}
        cfg = load_config(args.config, overrides)
        HANDLERS[args.command](args, cfg, ctx)
    except InvariantError as exc:
        sys.stderr.write(f"counterarg {args.command}: invariant violated: {exc}\n")
        status, code = "invariant_error", EXIT_INVARIANT
    except InputError as exc:
        sys.stderr.write(f"counterarg {args.command}: {exc}\n")
        status, code = "input_error", EXIT_INPUT
    timings[args.command] = round(time.perf_counter() - t0, 6)
    try:
        write_manifest(args, cfg, ctx, timings, status)
    except OSError as exc:
        sys.stderr.write(f"counterarg: could not write manifest: {exc}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
