"""Mention encoder: character, word and context views of an entity mention.

The final mention representation concatenates three equally wide pieces:

* ``m_w`` — a bi-LSTM over per-token [word vector; char-LSTM embedding]
  pairs (morphology plus lexical semantics),
* ``m_b`` — a bi-LSTM over the mention tokens' contextual embeddings,
* ``m_c`` — an attention-weighted sum of bi-LSTM states over the context
  windows flanking the mention.

Everything here is explicit forward/backward numpy code; the per-step LSTM
recurrences run on the selected kernel backend. All LSTM widths are "per
direction": a hidden size of H yields 2H-wide concatenated outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import Config
from .embeddings import ContextWindows
from .errors import DimensionError, EmbeddingError


# ---------------------------------------------------------------------------
# parameters


@dataclass
class LstmDirParams:
    wx: np.ndarray   # (input, 4H)
    wh: np.ndarray   # (H, 4H)
    b: np.ndarray    # (4H,)


@dataclass
class LstmParams:
    fwd: LstmDirParams
    bwd: LstmDirParams

    @property
    def input_size(self) -> int:
        return self.fwd.wx.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.fwd.wh.shape[0]

    def tensors(self, prefix: str) -> dict[str, np.ndarray]:
        out = {}
        for direction in ("fwd", "bwd"):
            p = getattr(self, direction)
            out[f"{prefix}.{direction}.wx"] = p.wx
            out[f"{prefix}.{direction}.wh"] = p.wh
            out[f"{prefix}.{direction}.b"] = p.b
        return out


@dataclass
class EncoderParams:
    char_embedding: np.ndarray      # (vocab, char_dim); row 0 = unknown char
    char_lstm: LstmParams           # char_dim -> char_hidden per direction
    wordchar_lstm: LstmParams       # (word_dim + 2*char_hidden) -> hidden
    mention_lstm: LstmParams        # ctx_dim -> hidden
    context_lstm: LstmParams        # ctx_dim -> hidden
    context_lstm_right: LstmParams | None  # separate right-window LSTM when unshared
    w_e: np.ndarray                 # (attn_dim, 2*hidden)
    w_a: np.ndarray                 # (attn_dim,)

    def right_context_lstm(self) -> LstmParams:
        return self.context_lstm_right if self.context_lstm_right is not None else self.context_lstm

    def tensors(self) -> dict[str, np.ndarray]:
        out = {"char_embedding": self.char_embedding}
        out.update(self.char_lstm.tensors("char_lstm"))
        out.update(self.wordchar_lstm.tensors("wordchar_lstm"))
        out.update(self.mention_lstm.tensors("mention_lstm"))
        out.update(self.context_lstm.tensors("context_lstm"))
        if self.context_lstm_right is not None:
            out.update(self.context_lstm_right.tensors("context_lstm_right"))
        out["w_e"] = self.w_e
        out["w_a"] = self.w_a
        return out


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = shape[0]
    fan_out = shape[1] if len(shape) > 1 else 1
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


def init_lstm_dir(rng: np.random.Generator, input_size: int, hidden: int) -> LstmDirParams:
    b = np.zeros(4 * hidden)
    b[hidden:2 * hidden] = 1.0   # forget-gate bias starts open
    return LstmDirParams(
        wx=glorot_uniform(rng, (input_size, 4 * hidden)),
        wh=glorot_uniform(rng, (hidden, 4 * hidden)),
        b=b,
    )


def init_lstm(rng: np.random.Generator, input_size: int, hidden: int) -> LstmParams:
    return LstmParams(fwd=init_lstm_dir(rng, input_size, hidden),
                      bwd=init_lstm_dir(rng, input_size, hidden))


def init_encoder(rng: np.random.Generator, cfg: Config, char_vocab_size: int) -> EncoderParams:
    wordchar_in = cfg.word_dim + cfg.d_hc
    return EncoderParams(
        char_embedding=glorot_uniform(rng, (char_vocab_size, cfg.char_dim)),
        char_lstm=init_lstm(rng, cfg.char_dim, cfg.char_hidden),
        wordchar_lstm=init_lstm(rng, wordchar_in, cfg.hidden),
        mention_lstm=init_lstm(rng, cfg.ctx_dim, cfg.hidden),
        context_lstm=init_lstm(rng, cfg.ctx_dim, cfg.hidden),
        context_lstm_right=(None if cfg.share_context_lstm
                            else init_lstm(rng, cfg.ctx_dim, cfg.hidden)),
        w_e=glorot_uniform(rng, (cfg.attn_dim, cfg.d_h)),
        w_a=glorot_uniform(rng, (cfg.attn_dim,)),
    )


# ---------------------------------------------------------------------------
# bi-directional LSTM wrappers


@dataclass
class BiLstmCache:
    x: np.ndarray
    mask: np.ndarray            # float 0/1, in sequence order
    fwd: tuple                  # (h, c, gates) in sequence order
    bwd: tuple                  # (h, c, gates) in reversed processing order
    h_seq: np.ndarray           # (T, 2H) emitted per-step output, masked rows zero
    h_final: np.ndarray         # (2H,) [fwd final; bwd final]


def bilstm_forward(params: LstmParams, x: np.ndarray,
                   mask: np.ndarray | None = None) -> BiLstmCache:
    if x.ndim != 2 or x.shape[1] != params.input_size:
        raise DimensionError(
            f"LSTM expects (T, {params.input_size}) inputs, got {x.shape}"
        )
    T = x.shape[0]
    H = params.hidden_size
    fmask = np.ones(T) if mask is None else np.asarray(mask, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    x_rev = np.ascontiguousarray(x[::-1])
    mask_rev = np.ascontiguousarray(fmask[::-1])
    fwd = kernels.lstm_forward(params.fwd.wx, params.fwd.wh, params.fwd.b, x, fmask)
    bwd = kernels.lstm_forward(params.bwd.wx, params.bwd.wh, params.bwd.b, x_rev, mask_rev)
    h_seq = np.zeros((T, 2 * H))
    if T:
        keep = fmask[:, None]
        h_seq[:, :H] = fwd[0] * keep
        h_seq[:, H:] = bwd[0][::-1] * keep
    h_final = np.concatenate([
        fwd[0][-1] if T else np.zeros(H),
        bwd[0][-1] if T else np.zeros(H),
    ])
    return BiLstmCache(x=x, mask=fmask, fwd=fwd, bwd=bwd, h_seq=h_seq, h_final=h_final)


def bilstm_backward(params: LstmParams, cache: BiLstmCache,
                    dh_seq: np.ndarray | None,
                    dh_final: np.ndarray | None) -> tuple[np.ndarray, dict]:
    """Returns (dx, grads) with grads keyed fwd.wx/fwd.wh/fwd.b/bwd.*."""
    T = cache.x.shape[0]
    H = params.hidden_size
    zero_h = np.zeros(H)
    d_seq = np.zeros((T, 2 * H)) if dh_seq is None else dh_seq * cache.mask[:, None]
    d_final_f = dh_final[:H] if dh_final is not None else zero_h
    d_final_b = dh_final[H:] if dh_final is not None else zero_h
    if T == 0:
        grads = {name: np.zeros_like(arr) for name, arr in params.tensors("").items()}
        return np.zeros_like(cache.x), {k.lstrip("."): v for k, v in grads.items()}
    h_f, c_f, g_f = cache.fwd
    dx_f, dwx_f, dwh_f, db_f = kernels.lstm_backward(
        params.fwd.wx, params.fwd.wh, cache.x, cache.mask,
        h_f, c_f, g_f, np.ascontiguousarray(d_seq[:, :H]), d_final_f, zero_h)
    h_b, c_b, g_b = cache.bwd
    x_rev = np.ascontiguousarray(cache.x[::-1])
    mask_rev = np.ascontiguousarray(cache.mask[::-1])
    dx_b, dwx_b, dwh_b, db_b = kernels.lstm_backward(
        params.bwd.wx, params.bwd.wh, x_rev, mask_rev,
        h_b, c_b, g_b, np.ascontiguousarray(d_seq[::-1, H:]), d_final_b, zero_h)
    dx = dx_f + dx_b[::-1]
    grads = {
        "fwd.wx": dwx_f, "fwd.wh": dwh_f, "fwd.b": db_f,
        "bwd.wx": dwx_b, "bwd.wh": dwh_b, "bwd.b": db_b,
    }
    return dx, grads


def _acc(dst: dict, key: str, value: np.ndarray) -> None:
    if key in dst:
        dst[key] += value
    else:
        dst[key] = value.copy() if isinstance(value, np.ndarray) else value


def _acc_lstm(dst: dict, prefix: str, grads: dict) -> None:
    for key, value in grads.items():
        _acc(dst, f"{prefix}.{key}", value)


# ---------------------------------------------------------------------------
# encoder pieces


def char_embed(params: EncoderParams, char_ids: list[int]):
    """Character bi-LSTM embedding of one token: [fwd final; bwd final]."""
    if not char_ids:
        raise EmbeddingError("cannot char-embed an empty token")
    rows = params.char_embedding[np.asarray(char_ids, dtype=np.intp)]
    cache = bilstm_forward(params.char_lstm, rows)
    return cache.h_final, cache


def char_embed_backward(params: EncoderParams, char_ids: list[int],
                        cache: BiLstmCache, dc: np.ndarray, grads: dict) -> None:
    dx, lstm_grads = bilstm_backward(params.char_lstm, cache, None, dc)
    _acc_lstm(grads, "char_lstm", lstm_grads)
    if "char_embedding" not in grads:
        grads["char_embedding"] = np.zeros_like(params.char_embedding)
    np.add.at(grads["char_embedding"], np.asarray(char_ids, dtype=np.intp), dx)


@dataclass
class WordCharCache:
    char_caches: list[BiLstmCache]
    lstm: BiLstmCache


def encode_word_char(params: EncoderParams, word_vecs: np.ndarray,
                     char_ids: list[list[int]]):
    """m_w: bi-LSTM final states over per-token [word vector; char embedding]."""
    if word_vecs.shape[0] != len(char_ids) or word_vecs.shape[0] == 0:
        raise DimensionError("need one word vector and char sequence per mention token")
    char_caches = []
    token_rows = []
    for vec, ids in zip(word_vecs, char_ids):
        ck, cache = char_embed(params, ids)
        char_caches.append(cache)
        token_rows.append(np.concatenate([vec, ck]))
    lstm = bilstm_forward(params.wordchar_lstm, np.stack(token_rows))
    return lstm.h_final, WordCharCache(char_caches=char_caches, lstm=lstm)


def encode_word_char_backward(params: EncoderParams, char_ids: list[list[int]],
                              cache: WordCharCache, dm_w: np.ndarray, grads: dict) -> None:
    dx, lstm_grads = bilstm_backward(params.wordchar_lstm, cache.lstm, None, dm_w)
    _acc_lstm(grads, "wordchar_lstm", lstm_grads)
    word_dim = params.wordchar_lstm.input_size - 2 * params.char_lstm.hidden_size
    for ids, ccache, drow in zip(char_ids, cache.char_caches, dx):
        char_embed_backward(params, ids, ccache, drow[word_dim:], grads)
    # word vectors are pretrained constants; their slice of dx is dropped


def encode_mention_context(params: EncoderParams, mention_ctx: np.ndarray):
    """m_b: bi-LSTM final states over the mention tokens' contextual rows."""
    if mention_ctx.shape[0] == 0:
        raise DimensionError("mention must have at least one contextual row")
    cache = bilstm_forward(params.mention_lstm, mention_ctx)
    return cache.h_final, cache


@dataclass
class AttendCache:
    left: BiLstmCache
    right: BiLstmCache
    h_all: np.ndarray        # (2n, 2H) stacked left+right per-step outputs
    valid: np.ndarray        # (2n,) bool
    e: np.ndarray            # (2n, attn_dim) tanh features
    attention: np.ndarray    # (2n,) weights, exactly 0 at masked slots
    empty: bool


def attend_context(params: EncoderParams, windows: ContextWindows):
    """m_c: attention-weighted sum of context-window bi-LSTM states.

    Attention is normalized jointly over the unmasked steps of both windows;
    masked (padding) steps get weight exactly zero. A fully padded context
    yields a zero vector and an ``empty`` flag.
    """
    left = bilstm_forward(params.context_lstm, windows.left,
                          windows.left_mask.astype(np.float64))
    right = bilstm_forward(params.right_context_lstm(), windows.right,
                           windows.right_mask.astype(np.float64))
    h_all = np.vstack([left.h_seq, right.h_seq])
    valid = np.concatenate([windows.left_mask, windows.right_mask])
    n_steps = h_all.shape[0]
    if not valid.any():
        cache = AttendCache(left=left, right=right, h_all=h_all, valid=valid,
                            e=np.zeros((n_steps, params.w_e.shape[0])),
                            attention=np.zeros(n_steps), empty=True)
        return np.zeros(h_all.shape[1]), cache
    e = np.tanh(h_all @ params.w_e.T)
    logits = e @ params.w_a
    shift = logits[valid].max()
    exps = np.where(valid, np.exp(logits - shift), 0.0)
    attention = exps / exps.sum()
    m_c = attention @ h_all
    cache = AttendCache(left=left, right=right, h_all=h_all, valid=valid,
                        e=e, attention=attention, empty=False)
    return m_c, cache


def attend_context_backward(params: EncoderParams, cache: AttendCache,
                            dm_c: np.ndarray, grads: dict) -> None:
    n = cache.left.x.shape[0]
    if cache.empty:
        return
    a = cache.attention
    dh_all = a[:, None] * dm_c[None, :]
    da = cache.h_all @ dm_c
    dlogits = a * (da - float(a @ da))
    _acc(grads, "w_a", cache.e.T @ dlogits)
    dq = (dlogits[:, None] * params.w_a[None, :]) * (1.0 - cache.e ** 2)
    _acc(grads, "w_e", dq.T @ cache.h_all)
    dh_all += dq @ params.w_e
    _, left_grads = bilstm_backward(params.context_lstm, cache.left, dh_all[:n], None)
    _acc_lstm(grads, "context_lstm", left_grads)
    right_prefix = ("context_lstm_right" if params.context_lstm_right is not None
                    else "context_lstm")
    _, right_grads = bilstm_backward(params.right_context_lstm(), cache.right,
                                     dh_all[n:], None)
    _acc_lstm(grads, right_prefix, right_grads)


# ---------------------------------------------------------------------------
# full mention encoding


@dataclass
class EncoderInputs:
    """Featurized mention, ready for the encoder."""

    word_vecs: np.ndarray            # (K, word_dim)
    char_ids: list[list[int]]        # per mention token
    mention_ctx: np.ndarray          # (K, ctx_dim)
    windows: ContextWindows


@dataclass
class MentionRepr:
    m_w: np.ndarray
    m_b: np.ndarray
    m_c: np.ndarray
    m: np.ndarray                    # [m_w; m_b; m_c]


@dataclass
class EncodeCache:
    word_char: WordCharCache | None
    mention: BiLstmCache | None
    attend: AttendCache | None
    d_h: int
    char_ids: list[list[int]]
    empty_context: bool = field(default=False)


def encode(params: EncoderParams, inputs: EncoderInputs, *,
           use_word_char: bool = True, use_bert_mention: bool = True,
           use_context_attn: bool = True) -> tuple[MentionRepr, EncodeCache]:
    """Full mention representation m = [m_w; m_b; m_c].

    Ablation toggles zero out the corresponding piece (widths stay fixed so
    parameter shapes and checkpoints are unaffected).
    """
    d_h = 2 * params.wordchar_lstm.hidden_size
    wc_cache = None
    m_w = np.zeros(d_h)
    if use_word_char:
        m_w, wc_cache = encode_word_char(params, inputs.word_vecs, inputs.char_ids)
    mention_cache = None
    m_b = np.zeros(d_h)
    if use_bert_mention:
        m_b, mention_cache = encode_mention_context(params, inputs.mention_ctx)
    attend_cache = None
    m_c = np.zeros(d_h)
    if use_context_attn:
        m_c, attend_cache = attend_context(params, inputs.windows)
    repr_ = MentionRepr(m_w=m_w, m_b=m_b, m_c=m_c,
                        m=np.concatenate([m_w, m_b, m_c]))
    cache = EncodeCache(word_char=wc_cache, mention=mention_cache, attend=attend_cache,
                        d_h=d_h, char_ids=inputs.char_ids,
                        empty_context=attend_cache.empty if attend_cache else False)
    return repr_, cache


def encode_backward(params: EncoderParams, cache: EncodeCache,
                    dm: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every encoder tensor, given dm."""
    d_h = cache.d_h
    grads: dict[str, np.ndarray] = {}
    if cache.word_char is not None:
        encode_word_char_backward(params, cache.char_ids, cache.word_char,
                                  dm[:d_h], grads)
    if cache.mention is not None:
        _, lstm_grads = bilstm_backward(params.mention_lstm, cache.mention,
                                        None, dm[d_h:2 * d_h])
        _acc_lstm(grads, "mention_lstm", lstm_grads)
    if cache.attend is not None:
        attend_context_backward(params, cache.attend, dm[2 * d_h:], grads)
    return grads
