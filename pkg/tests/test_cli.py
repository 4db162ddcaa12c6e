import json
import os

import pytest

from counterarg import cli

import synth

CFG = """\
hidden = 8
embed_dim = 8
layers = 1
dropout = 0
max_statement_tokens = 30
max_passage_tokens = 40
max_argument_tokens = 20
epochs = 2
batch_size = 4
lr = 0.5
val_fraction = 0
max_tokens = 15
beam = 2
"""


def run(*argv):
    return cli.main([str(a) for a in argv])


def manifest(path):
    return json.loads(open(f"{path}.manifest.json").read())


@pytest.fixture(scope="module")
def pipe(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "cfg.txt").write_text(CFG)
    synth.write_jsonl(d / "raw.jsonl", synth.e2e_corpus(n_articles=60, sentences=10))
    synth.write_jsonl(d / "st.jsonl", synth.e2e_statements(4, 1))
    c = ["--config", d / "cfg.txt"]
    steps = [
        ("ingest", "raw.jsonl", "arts.jsonl", []),
        ("segment", "arts.jsonl", "psg.jsonl", []),
        ("index", "psg.jsonl", "idx.bin", []),
        ("retrieve", "st.jsonl", "ret.jsonl", ["--index", d / "idx.bin", "--oracle"]),
        ("rank", "ret.jsonl", "rank.jsonl", ["--oracle"]),
        ("keyphrases", "rank.jsonl", "kp.jsonl", []),
        ("prep", "kp.jsonl", "pairs.jsonl", []),
        ("train", "pairs.jsonl", "model.ckpt", []),
        ("generate", "st.jsonl", "gen.jsonl", ["--index", d / "idx.bin", "--checkpoint", d / "model.ckpt"]),
        ("evaluate", "gen.jsonl", "eval.jsonl", ["--checkpoint", d / "model.ckpt"]),
    ]
    for cmd, src, dst, extra in steps:
        code = run(cmd, *c, "--input", d / src, "--output", d / dst, *extra)
        assert code == 0, cmd
    return d


def test_every_stage_writes_output_and_manifest(pipe):
    for name in ("arts.jsonl", "psg.jsonl", "idx.bin", "ret.jsonl", "rank.jsonl", "kp.jsonl", "pairs.jsonl",
                 "model.ckpt", "gen.jsonl", "eval.jsonl"):
        assert (pipe / name).is_file(), name
        m = manifest(pipe / name)
        assert m["status"] == "ok" and m["version"]
        assert m["outputs"]["output"]["sha256"] == cli.file_digest(pipe / name)
        assert m["inputs"]["config"]["sha256"] == cli.file_digest(pipe / "cfg.txt")
    assert not list(pipe.glob("*.partial"))
    m = manifest(pipe / "gen.jsonl")
    assert set(m["inputs"]) == {"input", "checkpoint", "index", "config"}
    assert m["config"]["beam"] == 2


def test_evaluate_outputs(pipe):
    lines = (pipe / "eval.jsonl").read_text().splitlines()
    summary = json.loads(lines[-1])["summary"]
    assert summary["pairs"] == len(lines) - 1
    assert "uncommon_fraction" in summary
    assert (pipe / "eval.jsonl.table.txt").read_text().startswith("System")
    assert (pipe / "eval.distinct.png").stat().st_size > 0
    assert (pipe / "eval.uncommon.png").stat().st_size > 0


def test_evaluate_identity_gives_bleu_one(pipe, tmp_path):
    recs = [{"id": "a", "argument": "Taxes hurt small firms badly.", "tokens": "Taxes hurt small firms badly .".split()},
            {"id": "b", "argument": "Walls keep people out.", "tokens": "Walls keep people out .".split()}]
    synth.write_jsonl(tmp_path / "g.jsonl", recs)
    assert run("evaluate", "--input", tmp_path / "g.jsonl", "--output", tmp_path / "e.jsonl") == 0
    summary = json.loads((tmp_path / "e.jsonl").read_text().splitlines()[-1])["summary"]
    assert summary["bleu2"] == pytest.approx(1.0) and summary["rouge2_recall"] == pytest.approx(1.0)


def test_rank_oracle_keeps_record_fields(pipe):
    rec = json.loads((pipe / "rank.jsonl").read_text().splitlines()[0])
    assert rec["oracle"] is True and rec["ranked"]
    assert {"id", "statement", "argument"} <= set(rec)


def test_generation_is_deterministic(pipe, tmp_path):
    out = tmp_path / "gen2.jsonl"
    code = run("generate", "--config", pipe / "cfg.txt", "--input", pipe / "st.jsonl", "--output", out, "--index",
               pipe / "idx.bin", "--checkpoint", pipe / "model.ckpt")
    assert code == 0
    assert out.read_bytes() == (pipe / "gen.jsonl").read_bytes()


def test_unknown_flag_and_missing_output(tmp_path, capsys):
    assert run("ingest", "--bogus") == 64
    assert run("nosuchcommand") == 64
    assert run("ingest", "--input", tmp_path / "x") == 64
    assert run("--version") == 0


def test_input_rejections(tmp_path):
    out = tmp_path / "o.jsonl"
    assert run("ingest", "--input", tmp_path / "missing.jsonl", "--output", out) == 1
    assert manifest(out)["status"] == "input_error"
    (tmp_path / "bad.jsonl").write_text("{not json\n")
    assert run("segment", "--input", tmp_path / "bad.jsonl", "--output", out) == 1
    (tmp_path / "cfg.txt").write_text("no_such_key = 3\n")
    assert run("ingest", "--config", tmp_path / "cfg.txt", "--input", tmp_path / "bad.jsonl", "--output", out) == 1
    (tmp_path / "cfg.txt").write_text("topk = many\n")
    assert run("ingest", "--config", tmp_path / "cfg.txt", "--input", tmp_path / "bad.jsonl", "--output", out) == 1
    assert run("retrieve", "--input", tmp_path / "bad.jsonl", "--output", out) == 1  # no index given
    assert not (tmp_path / "o.jsonl.partial").exists()


def test_rank_oracle_requires_argument(pipe, tmp_path):
    recs = [json.loads(line) for line in (pipe / "ret.jsonl").read_text().splitlines()]
    for r in recs:
        r.pop("argument", None)
    synth.write_jsonl(tmp_path / "r.jsonl", recs)
    assert run("rank", "--oracle", "--input", tmp_path / "r.jsonl", "--output", tmp_path / "o.jsonl") == 1


def test_gradcheck_command(tmp_path):
    out = tmp_path / "gc.json"
    assert run("gradcheck", "--seed", 3, "--output", out) == 0
    report = json.loads(out.read_text())
    assert report["failed"] == [] and report["groups"]
    assert manifest(out)["counts"]["failed"] == 0


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    def broken(seed, per_param=3):
        return {"w": (1.0, 1.0, 1.0, 0.0, False)}

    monkeypatch.setattr(cli, "tiny_gradcheck", broken)
    assert run("gradcheck", "--output", tmp_path / "gc.json") == 2
    assert manifest(tmp_path / "gc.json")["status"] == "invariant_error"


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "t.txt"
    with pytest.raises(RuntimeError):
        with cli.atomic_write(target) as fh:
            fh.write("half")
            raise RuntimeError("boom")
    assert not target.exists() and not os.path.exists(f"{target}.partial")


def test_data_dir_environment_overrides_shipped_files(tmp_path, monkeypatch):
    from counterarg import resources

    (tmp_path / "stopwords.txt").write_text("# custom\nzzz\n")
    monkeypatch.setenv("CANDELA_DATA_DIR", str(tmp_path))
    resources._default_wordlist.cache_clear()
    try:
        assert resources.data_path("stopwords.txt") == tmp_path / "stopwords.txt"
        assert resources.stopwords() == {"zzz"}
        assert resources.data_path("gazetteer.txt") == resources.PACKAGE_DATA / "gazetteer.txt"  # falls back
    finally:
        monkeypatch.delenv("CANDELA_DATA_DIR")
        resources._default_wordlist.cache_clear()
