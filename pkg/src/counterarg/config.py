"""Flat key=value run configuration shared by every stage.

Precedence, lowest to highest: built-in defaults, the --config file,
command-line flags.
"""

import hashlib
from dataclasses import asdict, dataclass, fields

from .errors import InputError


@dataclass
class RunConfig:
    seed: int = 13
    # retrieval
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    topk: int = 20
    media: str = ""  # comma-separated allow-list for ingest; empty accepts any
    # ranking
    top_p: int = 10
    stance_threshold: float = 5.0
    stance_fallback: bool = False  # keep the unfiltered ranking when the stance filter empties it
    llr_threshold: float = 10.83
    # pair construction
    max_statement_tokens: int = 500
    max_passage_tokens: int = 400
    max_argument_tokens: int = 120
    val_fraction: float = 0.1
    # model
    vocab_size: int = 50000
    embed_dim: int = 300
    hidden: int = 512
    layers: int = 2
    dropout: float = 0.2
    init_scale: float = 0.1
    embed_init_scale: float = 0.1
    gamma: float = 1.0
    eta: float = 1.0
    # training
    lr: float = 0.15
    initial_accumulator: float = 0.1
    clip_norm: float = 2.0
    batch_size: int = 64
    epochs: int = 50
    patience: int = 3
    target_perplexity: float = 0.0
    # decoding
    beam: int = 5
    max_tokens: int = 120
    max_sentences: int = 10
    # evaluation
    uncommon_ks: str = "100,500,1000,2000"
    # resources
    word_vectors: str = ""
    index: str = ""

    def to_dict(self):
        return asdict(self)

    @property
    def media_set(self):
        return frozenset(m.strip() for m in self.media.split(",") if m.strip()) or None

    @property
    def ks(self):
        try:
            return tuple(int(k) for k in self.uncommon_ks.split(",") if k.strip())
        except ValueError:
            raise InputError(f"bad uncommon_ks value {self.uncommon_ks!r}") from None

    def set(self, key, raw, path=None, lineno=None):
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise InputError(f"unknown config key {key!r}", path, lineno)
        setattr(self, key, _convert(key, raw, types[key], path, lineno))


def _convert(key, raw, typ, path, lineno):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if typ in (bool, "bool"):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ in (int, "int"):
            return int(text)
        if typ in (float, "float"):
            return float(text)
    except ValueError:
        raise InputError(f"bad value {text!r} for {key}", path, lineno) from None
    return text


def load_config(path=None, overrides=None):
    """Defaults, then the file at ``path``, then ``overrides`` (skipping None values)."""
    cfg = RunConfig()
    if path:
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read config: {exc.strerror}", path) from None
        with fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InputError("expected key=value", path, lineno)
                key, value = line.split("=", 1)
                cfg.set(key.strip(), value, path, lineno)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg.set(key, value)
    return cfg


def stage_seed(master, stage):
    """Per-stage seed derived from the master seed by a stable hash."""
    digest = hashlib.sha256(f"{master}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")
