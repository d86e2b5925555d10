"""Run configuration: model widths, training hyperparameters, ablation toggles.

A single flat config object drives the whole pipeline. Precedence when
resolving: built-in defaults < config file (flat ``key=value`` lines) <
explicit overrides (CLI flags). The resolved config is persisted in every
run manifest and inside checkpoints.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ZtyperError

ABLATION_FLAGS = ("no_memory", "no_context_attn", "no_word_char", "no_bert_mention")
LABEL_MODES = ("bert_file", "avg_word")
SIMILARITY_AXES = ("seen", "candidate")


@dataclass
class Config:
    # embedding widths
    word_dim: int = 300          # pretrained word vectors
    ctx_dim: int = 768           # precomputed contextual token embeddings
    label_dim: int = 768         # label semantic embeddings
    char_dim: int = 30           # learned character embeddings

    # encoder widths (LSTM sizes are per direction)
    hidden: int = 200
    char_hidden: int = 50
    attn_dim: int = 100
    mem_dim: int = 200
    window: int = 10
    share_context_lstm: bool = True

    # similarity normalization: each candidate column is a distribution over
    # seen types ("seen"), or each seen row over candidates ("candidate")
    similarity_norm_axis: str = "seen"

    # training
    learning_rate: float = 1e-4
    decay_rate: float = 0.9
    margin: float = 1.0
    epochs: int = 10
    batch_size: int = 64
    seed: int = 0
    test_fraction: float = 0.5
    negative_cap: int = 0        # 0 = use every seen non-gold type as negative
    seen_levels: str = "1"       # comma-joined hierarchy levels marked seen

    # ablations (Table-style run-time toggles)
    no_memory: bool = False
    no_context_attn: bool = False
    no_word_char: bool = False
    no_bert_mention: bool = False
    label_mode: str = "bert_file"

    @property
    def d_h(self) -> int:
        """Concatenated bi-LSTM hidden width."""
        return 2 * self.hidden

    @property
    def d_hc(self) -> int:
        return 2 * self.char_hidden

    @property
    def d_e(self) -> int:
        """Mention representation width: [m_w; m_b; m_c]."""
        return 3 * self.d_h

    def seen_level_set(self) -> set[int]:
        try:
            levels = {int(part) for part in str(self.seen_levels).split(",") if part.strip()}
        except ValueError as exc:
            raise ZtyperError(f"bad seen_levels {self.seen_levels!r}: {exc}") from None
        if not levels:
            raise ZtyperError("seen_levels is empty")
        return levels

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ZtyperError("learning_rate must be > 0")
        if self.margin <= 0:
            raise ZtyperError("margin must be > 0")
        if not 0 < self.decay_rate <= 1:
            raise ZtyperError("decay_rate must be in (0, 1]")
        if self.window < 1:
            raise ZtyperError("window must be >= 1")
        if self.batch_size < 1:
            raise ZtyperError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ZtyperError("epochs must be >= 0")
        if not 0 < self.test_fraction < 1:
            raise ZtyperError("test_fraction must be in (0, 1)")
        if self.label_mode not in LABEL_MODES:
            raise ZtyperError(f"label_mode must be one of {LABEL_MODES}")
        if self.similarity_norm_axis not in SIMILARITY_AXES:
            raise ZtyperError(f"similarity_norm_axis must be one of {SIMILARITY_AXES}")
        for name in ("word_dim", "ctx_dim", "label_dim", "char_dim", "hidden",
                     "char_hidden", "attn_dim", "mem_dim"):
            if getattr(self, name) < 1:
                raise ZtyperError(f"{name} must be >= 1")
        self.seen_level_set()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(name: str, kind: type, raw: str):
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ZtyperError(f"config key {name}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ZtyperError(f"config key {name}: expected {kind.__name__}, got {raw!r}") from None


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(Config)}
_PY_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ZtyperError(f"config line {lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ZtyperError(f"config line {lineno}: unknown key {key!r}")
        kind = _PY_TYPES.get(str(_FIELD_TYPES[key]), str)
        values[key] = _coerce(key, kind, raw.strip())
    return values


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> Config:
    """Merge defaults, config-file values, and explicit overrides (in that order)."""
    merged: dict = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if key not in _FIELD_TYPES:
                raise ZtyperError(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = value
    cfg = Config(**merged)
    cfg.validate()
    return cfg
