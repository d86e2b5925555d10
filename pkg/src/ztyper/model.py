"""Full model assembly: encoder plus memory scoring (or the bilinear baseline).

A ``ScoringContext`` fixes everything that depends only on the label bank
and the evaluation mode (memory state, similarity columns, candidate ids),
so per-mention work is encode -> score -> loss. Scores for seen candidates
use training-mode similarity columns; unseen candidates use zero-shot
columns; "overall" concatenates both, aligned with global type ids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import memory as mem
from .config import Config
from .encoder import EncoderInputs, EncoderParams, encode, encode_backward, init_encoder
from .errors import DimensionError
from .ontology import LabelBank, TypeHierarchy, similarity_matrix


@dataclass
class ModelParams:
    encoder: EncoderParams
    memory: mem.MemoryParams
    baseline: mem.BilinearParams

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for name, arr in self.encoder.tensors().items():
            out[f"encoder.{name}"] = arr
        for name, arr in self.memory.tensors().items():
            out[f"memory.{name}"] = arr
        for name, arr in self.baseline.tensors().items():
            out[f"baseline.{name}"] = arr
        return out


def init_model(rng: np.random.Generator, cfg: Config, char_vocab_size: int,
               d_seen: int, label_dim: int | None = None) -> ModelParams:
    d_b = cfg.label_dim if label_dim is None else label_dim
    return ModelParams(
        encoder=init_encoder(rng, cfg, char_vocab_size),
        memory=mem.init_memory(rng, cfg, d_seen, label_dim=d_b),
        baseline=mem.init_bilinear(rng, cfg, label_dim=d_b),
    )


@dataclass
class ScoringContext:
    """Candidate set plus the fixed scoring inputs for one mode."""

    kind: str                     # "memory" or "bilinear"
    candidate_ids: np.ndarray     # global type ids aligned with score entries
    state: mem.MemoryState | None
    r: np.ndarray | None          # (d_seen, n_candidates)
    f_cand: np.ndarray | None     # (n_candidates, d_b) for the bilinear path


def make_scoring_context(model: ModelParams, cfg: Config, bank: LabelBank,
                         hierarchy: TypeHierarchy, candidates: str) -> ScoringContext:
    """Build the per-mode scoring context.

    candidates: "seen" (training / level-1), "unseen" (level-2 zero-shot) or
    "all" (overall: training columns for seen types, zero-shot for unseen).
    """
    if candidates not in ("seen", "unseen", "all"):
        raise ValueError(f"candidates must be seen/unseen/all, got {candidates!r}")
    d_s = hierarchy.d_seen
    ids = {
        "seen": np.arange(d_s),
        "unseen": np.arange(d_s, hierarchy.size),
        "all": np.arange(hierarchy.size),
    }[candidates]
    if ids.size == 0:
        raise DimensionError(f"no candidate types for mode {candidates!r}")
    axis = cfg.similarity_norm_axis
    if cfg.no_memory:
        f_cand = bank.reprs[ids]
        return ScoringContext(kind="bilinear", candidate_ids=ids, state=None,
                              r=None, f_cand=f_cand)
    state = mem.build_memory(model.memory, bank.f_seen(hierarchy))
    if candidates == "seen":
        r = similarity_matrix(bank, hierarchy, "training", axis).r
    elif candidates == "unseen":
        r = similarity_matrix(bank, hierarchy, "zeroshot", axis).r
    else:
        r = np.concatenate([
            similarity_matrix(bank, hierarchy, "training", axis).r,
            similarity_matrix(bank, hierarchy, "zeroshot", axis).r,
        ], axis=1)
    return ScoringContext(kind="memory", candidate_ids=ids, state=state, r=r,
                          f_cand=None)


@dataclass
class ForwardCache:
    encode_cache: object
    score_cache: object


def model_forward(model: ModelParams, cfg: Config, inputs: EncoderInputs,
                  ctx: ScoringContext, mention_id: str = "") \
        -> tuple[mem.PredictionRecord, ForwardCache]:
    repr_, enc_cache = encode(
        model.encoder, inputs,
        use_word_char=not cfg.no_word_char,
        use_bert_mention=not cfg.no_bert_mention,
        use_context_attn=not cfg.no_context_attn,
    )
    if ctx.kind == "memory":
        record, score_cache = mem.score(model.memory, ctx.state, repr_, ctx.r,
                                        mention_id=mention_id)
    else:
        record, score_cache = mem.bilinear_scores(model.baseline, repr_, ctx.f_cand,
                                                  mention_id=mention_id)
    return record, ForwardCache(encode_cache=enc_cache, score_cache=score_cache)


def model_backward(model: ModelParams, cfg: Config, ctx: ScoringContext,
                   cache: ForwardCache, dscores: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. all active tensors, prefixed."""
    if ctx.kind == "memory":
        dm, head_grads = mem.score_backward(model.memory, ctx.state,
                                            cache.score_cache, dscores)
        prefix = "memory"
    else:
        dm, head_grads = mem.bilinear_backward(model.baseline, cache.score_cache,
                                               dscores)
        prefix = "baseline"
    grads = {f"{prefix}.{name}": g for name, g in head_grads.items()}
    for name, g in encode_backward(model.encoder, cache.encode_cache, dm).items():
        grads[f"encoder.{name}"] = g
    return grads
