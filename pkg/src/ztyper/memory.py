"""Seen-type memory scoring and the bilinear no-memory baseline.

The memory holds every seen type's label representation. A mention is
projected into the memory space (u), attends over the seen types (p),
absorbs the association-weighted output memory (o), and the adjusted
representation (o + u) is projected into the association space where each
coordinate is an affinity with one seen type. Candidate scores transfer
those affinities through the similarity matrix: sigmoid(Rᵀ · association).

The bilinear baseline replaces all of that with a direct shared-space match
(A·m)·(B·f) and exists for the memory-ablation comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .encoder import MentionRepr, glorot_uniform
from .errors import DimensionError


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


@dataclass
class MemoryParams:
    w_map: np.ndarray   # (d_e, d_m): mention -> memory space
    w_f1: np.ndarray    # (d_b, d_m): label reprs -> input memory G
    w_f2: np.ndarray    # (d_b, d_m): label reprs -> output memory C
    w_p: np.ndarray     # (d_s, d_m): memory space -> association space

    def tensors(self) -> dict[str, np.ndarray]:
        return {"w_map": self.w_map, "w_f1": self.w_f1, "w_f2": self.w_f2, "w_p": self.w_p}


def init_memory(rng: np.random.Generator, cfg: Config, d_s: int,
                label_dim: int | None = None) -> MemoryParams:
    d_b = cfg.label_dim if label_dim is None else label_dim
    return MemoryParams(
        w_map=glorot_uniform(rng, (cfg.d_e, cfg.mem_dim)),
        w_f1=glorot_uniform(rng, (d_b, cfg.mem_dim)),
        w_f2=glorot_uniform(rng, (d_b, cfg.mem_dim)),
        w_p=glorot_uniform(rng, (d_s, cfg.mem_dim)),
    )


@dataclass
class MemoryState:
    """Input/output memory projections of the seen-type representations."""

    f_seen: np.ndarray   # (d_s, d_b)
    g: np.ndarray        # (d_s, d_m)
    c: np.ndarray        # (d_s, d_m)


def build_memory(params: MemoryParams, f_seen: np.ndarray) -> MemoryState:
    f_seen = np.asarray(f_seen, dtype=np.float64)
    if f_seen.ndim != 2 or f_seen.shape[1] != params.w_f1.shape[0]:
        raise DimensionError(
            f"memory content must be (d_s, {params.w_f1.shape[0]}), got {f_seen.shape}"
        )
    if f_seen.shape[0] != params.w_p.shape[0]:
        raise DimensionError(
            f"w_p expects {params.w_p.shape[0]} seen types, memory has {f_seen.shape[0]}"
        )
    return MemoryState(f_seen=f_seen, g=f_seen @ params.w_f1, c=f_seen @ params.w_f2)


def attend_memory(state: MemoryState, u: np.ndarray) -> np.ndarray:
    """Attention over seen types: softmax of u·g_i."""
    return softmax(state.g @ u)


def associate(state: MemoryState, p: np.ndarray) -> np.ndarray:
    """Attention-weighted sum of output memories: o = Σ p_i c_i."""
    if p.shape[0] != state.c.shape[0]:
        raise DimensionError(f"attention length {p.shape[0]} != {state.c.shape[0]} memories")
    return state.c.T @ p


@dataclass
class PredictionRecord:
    """Scores and the memory internals for one mention."""

    mention_id: str
    scores: np.ndarray                 # sigmoid scores over candidate types
    association: np.ndarray | None    # (d_s,) pre-similarity association scores
    attention: np.ndarray | None      # (d_s,) memory attention p
    selected: tuple[int, ...] = ()


@dataclass
class ScoreCache:
    m: np.ndarray
    u: np.ndarray
    p: np.ndarray
    o: np.ndarray
    association: np.ndarray
    scores: np.ndarray
    r: np.ndarray


def score(params: MemoryParams, state: MemoryState, m: MentionRepr | np.ndarray,
          r: np.ndarray, mention_id: str = "") -> tuple[PredictionRecord, ScoreCache]:
    """Full memory scoring path for one mention against candidate columns of r."""
    m_vec = m.m if isinstance(m, MentionRepr) else np.asarray(m, dtype=np.float64)
    if m_vec.shape[0] != params.w_map.shape[0]:
        raise DimensionError(
            f"mention width {m_vec.shape[0]} != w_map input {params.w_map.shape[0]}"
        )
    if r.shape[0] != state.g.shape[0]:
        raise DimensionError(
            f"similarity matrix has {r.shape[0]} seen rows, memory has {state.g.shape[0]}"
        )
    u = params.w_map.T @ m_vec
    p = attend_memory(state, u)
    o = associate(state, p)
    association = params.w_p @ (o + u)
    scores = sigmoid(r.T @ association)
    record = PredictionRecord(mention_id=mention_id, scores=scores,
                              association=association, attention=p)
    cache = ScoreCache(m=m_vec, u=u, p=p, o=o, association=association,
                       scores=scores, r=r)
    return record, cache


def score_backward(params: MemoryParams, state: MemoryState, cache: ScoreCache,
                   dscores: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Backprop through `score`. Returns (dm, grads over the memory tensors)."""
    dz = dscores * cache.scores * (1.0 - cache.scores)
    dassoc = cache.r @ dz
    dw_p = np.outer(dassoc, cache.o + cache.u)
    dv = params.w_p.T @ dassoc          # gradient on (o + u)
    do = dv
    du = dv.copy()
    dc = np.outer(cache.p, do)
    dp = state.c @ do
    dlogits = cache.p * (dp - float(cache.p @ dp))
    dg = np.outer(dlogits, cache.u)
    du += state.g.T @ dlogits
    dw_f1 = state.f_seen.T @ dg
    dw_f2 = state.f_seen.T @ dc
    dw_map = np.outer(cache.m, du)
    dm = params.w_map @ du
    return dm, {"w_map": dw_map, "w_f1": dw_f1, "w_f2": dw_f2, "w_p": dw_p}


# ---------------------------------------------------------------------------
# bilinear baseline (memory ablation)


@dataclass
class BilinearParams:
    a_map: np.ndarray   # (d_shared, d_e)
    b_map: np.ndarray   # (d_shared, d_b)

    def tensors(self) -> dict[str, np.ndarray]:
        return {"a_map": self.a_map, "b_map": self.b_map}


def init_bilinear(rng: np.random.Generator, cfg: Config, d_shared: int | None = None,
                  label_dim: int | None = None) -> BilinearParams:
    d_b = cfg.label_dim if label_dim is None else label_dim
    d_shared = d_b if d_shared is None else d_shared
    return BilinearParams(
        a_map=glorot_uniform(rng, (d_shared, cfg.d_e)),
        b_map=glorot_uniform(rng, (d_shared, d_b)),
    )


def bilinear_score(params: BilinearParams, m: MentionRepr | np.ndarray,
                   f: np.ndarray) -> float:
    """Raw shared-space match (A·m)·(B·f) for one mention/label pair."""
    m_vec = m.m if isinstance(m, MentionRepr) else np.asarray(m, dtype=np.float64)
    if m_vec.shape[0] != params.a_map.shape[1]:
        raise DimensionError(f"mention width {m_vec.shape[0]} != {params.a_map.shape[1]}")
    if f.shape[0] != params.b_map.shape[1]:
        raise DimensionError(f"label width {f.shape[0]} != {params.b_map.shape[1]}")
    return float((params.a_map @ m_vec) @ (params.b_map @ f))


@dataclass
class BilinearCache:
    m: np.ndarray
    am: np.ndarray
    bf: np.ndarray       # (n_cand, d_shared)
    f_cand: np.ndarray
    scores: np.ndarray


def bilinear_scores(params: BilinearParams, m: MentionRepr | np.ndarray,
                    f_cand: np.ndarray, mention_id: str = "") \
        -> tuple[PredictionRecord, BilinearCache]:
    """Sigmoid match scores of one mention against candidate label rows."""
    m_vec = m.m if isinstance(m, MentionRepr) else np.asarray(m, dtype=np.float64)
    am = params.a_map @ m_vec
    bf = f_cand @ params.b_map.T
    scores = sigmoid(bf @ am)
    record = PredictionRecord(mention_id=mention_id, scores=scores,
                              association=None, attention=None)
    return record, BilinearCache(m=m_vec, am=am, bf=bf, f_cand=f_cand, scores=scores)


def bilinear_backward(params: BilinearParams, cache: BilinearCache,
                      dscores: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    dz = dscores * cache.scores * (1.0 - cache.scores)
    dam = cache.bf.T @ dz
    dbf = np.outer(dz, cache.am)
    da_map = np.outer(dam, cache.m)
    db_map = dbf.T @ cache.f_cand
    dm = params.a_map.T @ dam
    return dm, {"a_map": da_map, "b_map": db_map}
