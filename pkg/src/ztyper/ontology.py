"""Type hierarchy, label representations, and seen/unseen similarity.

Label paths are "/"-joined strings like ``/PERSON/ARTIST``. Seen types get
the contiguous id range ``0..d_seen-1``, unseen types follow. The label bank
combines a semantic matrix (one row per label) with a binary hierarchy
matrix (self + immediate parent) into per-label representations; the
similarity matrix turns distances between those representations into
softmax affinities that transfer association-space scores from seen types
to candidates.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmbeddingError, HierarchyError


@dataclass(frozen=True)
class TypeNode:
    id: int
    path: str
    parent: int | None   # id of the immediate parent, None for roots
    level: int           # 1-based depth, equals the number of path segments
    seen: bool


def _split_path(path: str) -> list[str]:
    if not path.startswith("/") or path.endswith("/"):
        raise HierarchyError(f"bad label path {path!r}: must look like /A or /A/B")
    segments = path.split("/")[1:]
    if any(not seg for seg in segments):
        raise HierarchyError(f"bad label path {path!r}: empty segment")
    return segments


class TypeHierarchy:
    """Immutable forest of type nodes with a seen/unseen partition."""

    def __init__(self, nodes: list[TypeNode]):
        self.nodes = list(nodes)
        self._by_key = {node.path.upper(): node for node in self.nodes}
        self.d_seen = sum(1 for n in self.nodes if n.seen)
        self.d_unseen = len(self.nodes) - self.d_seen
        for idx, node in enumerate(self.nodes):
            if node.id != idx:
                raise HierarchyError(f"node ids must be contiguous, got {node.id} at {idx}")
            if node.seen != (idx < self.d_seen):
                raise HierarchyError("seen ids must precede unseen ids")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def node(self, type_id: int) -> TypeNode:
        return self.nodes[type_id]

    def path_of(self, type_id: int) -> str:
        return self.nodes[type_id].path

    def id_of(self, path: str) -> int:
        node = self._by_key.get(path.upper())
        if node is None:
            raise HierarchyError(f"unknown label path {path!r}")
        return node.id

    def has_path(self, path: str) -> bool:
        return path.upper() in self._by_key

    def parent_of(self, type_id: int) -> int | None:
        return self.nodes[type_id].parent

    def ancestors(self, type_id: int) -> list[int]:
        """Ids of all ancestors, nearest first."""
        out = []
        current = self.nodes[type_id].parent
        while current is not None:
            out.append(current)
            current = self.nodes[current].parent
        return out

    def nearest_seen_ancestor(self, type_id: int) -> int | None:
        """The node itself if seen, else the closest seen ancestor."""
        if self.nodes[type_id].seen:
            return type_id
        for anc in self.ancestors(type_id):
            if self.nodes[anc].seen:
                return anc
        return None

    def seen_ids(self) -> range:
        return range(self.d_seen)

    def unseen_ids(self) -> range:
        return range(self.d_seen, self.size)


def build_hierarchy(label_paths: list[str], seen_levels: set[int]) -> TypeHierarchy:
    """Build a hierarchy from label paths, marking the given levels seen.

    Paths at any level in ``seen_levels`` become seen types (e.g. ``{1, 2}``
    for a 3-level ontology trained on the top two levels). Ids are assigned
    seen-first, preserving input order within each group.
    """
    entries = []  # (path, segments)
    keys = set()
    for path in label_paths:
        segments = _split_path(path)
        key = path.upper()
        if key in keys:
            raise HierarchyError(f"duplicate label path {path!r}")
        keys.add(key)
        entries.append((path, segments))
    for path, segments in entries:
        if len(segments) > 1:
            parent_key = "/" + "/".join(segments[:-1]).upper()
            if parent_key not in keys:
                raise HierarchyError(
                    f"label path {path!r} has no parent {'/' + '/'.join(segments[:-1])!r} "
                    "in the hierarchy"
                )
    seen_entries = [(p, s) for p, s in entries if len(s) in seen_levels]
    unseen_entries = [(p, s) for p, s in entries if len(s) not in seen_levels]
    if not seen_entries:
        raise HierarchyError("no label path falls on a seen level")
    id_by_key = {}
    ordered = seen_entries + unseen_entries
    for idx, (path, _) in enumerate(ordered):
        id_by_key[path.upper()] = idx
    nodes = []
    for idx, (path, segments) in enumerate(ordered):
        parent = None
        if len(segments) > 1:
            parent = id_by_key["/" + "/".join(segments[:-1]).upper()]
        nodes.append(TypeNode(
            id=idx,
            path=path,
            parent=parent,
            level=len(segments),
            seen=idx < len(seen_entries),
        ))
    hierarchy = TypeHierarchy(nodes)
    _check_forest(hierarchy)
    return hierarchy


def _check_forest(h: TypeHierarchy) -> None:
    for node in h.nodes:
        if node.parent is None:
            if node.level != 1:
                raise HierarchyError(f"{node.path!r}: non-root node without parent")
            continue
        parent = h.node(node.parent)
        if parent.level != node.level - 1:
            raise HierarchyError(
                f"{node.path!r}: parent {parent.path!r} is at level {parent.level}, "
                f"expected {node.level - 1}"
            )


def load_hierarchy_file(path, seen_levels: set[int]) -> TypeHierarchy:
    """One label path per line; blank lines and ``#`` comments ignored."""
    paths = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.split("#", 1)[0].strip()
            if stripped:
                paths.append(stripped)
    return build_hierarchy(paths, seen_levels)


# ---------------------------------------------------------------------------
# label representations


def build_hier_matrix(h: TypeHierarchy) -> np.ndarray:
    """Binary (D, D) matrix: row i marks node i and its immediate parent."""
    size = h.size
    mat = np.zeros((size, size))
    for node in h.nodes:
        mat[node.id, node.id] = 1.0
        if node.parent is not None:
            mat[node.id, node.parent] = 1.0
    return mat


def build_label_reprs(semantic: np.ndarray, hier: np.ndarray) -> np.ndarray:
    """Per-label representation: own semantic row plus the parent's row."""
    if semantic.ndim != 2 or hier.ndim != 2:
        raise DimensionError("semantic and hier must be 2-D matrices")
    if hier.shape[0] != hier.shape[1]:
        raise DimensionError(f"hier must be square, got {hier.shape}")
    if hier.shape[0] != semantic.shape[0]:
        raise DimensionError(
            f"hier has {hier.shape[0]} labels but semantic has {semantic.shape[0]} rows"
        )
    return hier @ semantic


@dataclass
class LabelBank:
    """Semantic matrix, hierarchy matrix and combined label representations."""

    semantic: np.ndarray   # (D, d_b)
    hier: np.ndarray       # (D, D) binary
    reprs: np.ndarray      # (D, d_b), row i = semantic[i] + semantic[parent(i)]
    d_b: int

    def f_seen(self, h: TypeHierarchy) -> np.ndarray:
        return self.reprs[:h.d_seen]

    def f_unseen(self, h: TypeHierarchy) -> np.ndarray:
        return self.reprs[h.d_seen:]


def make_label_bank(h: TypeHierarchy, semantic: np.ndarray) -> LabelBank:
    semantic = np.asarray(semantic, dtype=np.float64)
    if semantic.shape[0] != h.size:
        raise DimensionError(
            f"semantic matrix has {semantic.shape[0]} rows for {h.size} labels"
        )
    hier = build_hier_matrix(h)
    reprs = build_label_reprs(semantic, hier)
    return LabelBank(semantic=semantic, hier=hier, reprs=reprs, d_b=semantic.shape[1])


_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def label_name_tokens(path: str) -> list[str]:
    """Words of the last path segment: split on _,- and case boundaries."""
    segment = _split_path(path)[-1]
    parts = re.split(r"[_\-]+", _CAMEL.sub("_", segment))
    return [p.lower() for p in parts if p]


def label_semantics_from_words(h: TypeHierarchy, vectors) -> np.ndarray:
    """Average word-vector label semantics (the avg_word label mode)."""
    rows = np.zeros((h.size, vectors.dim))
    for node in h.nodes:
        tokens = label_name_tokens(node.path)
        if not tokens:
            raise EmbeddingError(f"label {node.path!r} has no usable name tokens")
        rows[node.id] = np.mean([vectors.get(tok) for tok in tokens], axis=0)
    return rows


def label_semantics_from_file(h: TypeHierarchy, path) -> np.ndarray:
    """Load per-label vectors from ``<label-path>\\t<float> <float> ...`` lines.

    Rows come back ordered by node id. Duplicate keys: last one wins with a
    warning. Missing labels or inconsistent widths raise.
    """
    table: dict[str, np.ndarray] = {}
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            key, _, rest = line.rstrip("\n").partition("\t")
            if not rest:
                raise EmbeddingError(f"{path}:{lineno}: expected <path>\\t<floats>")
            try:
                vec = np.array([float(tok) for tok in rest.split()])
            except ValueError as exc:
                raise EmbeddingError(f"{path}:{lineno}: {exc}") from None
            if width is None:
                width = vec.size
            elif vec.size != width:
                raise EmbeddingError(
                    f"{path}:{lineno}: vector width {vec.size} != {width}"
                )
            norm_key = key.strip().upper()
            if norm_key in table:
                warnings.warn(f"duplicate label key {key!r} in {path}; last one wins")
            table[norm_key] = vec
    if width is None:
        raise EmbeddingError(f"{path}: no label vectors found")
    rows = np.zeros((h.size, width))
    for node in h.nodes:
        vec = table.get(node.path.upper())
        if vec is None:
            raise EmbeddingError(f"{path}: missing vector for label {node.path!r}")
        rows[node.id] = vec
    return rows


# ---------------------------------------------------------------------------
# seen <-> candidate similarity


@dataclass
class SimilarityMatrix:
    """Softmaxed negative-distance affinities, shape (d_seen, n_candidates)."""

    r: np.ndarray
    mode: str            # "training" (candidates = seen) or "zeroshot"
    norm_axis: str


def similarity_matrix(bank: LabelBank, h: TypeHierarchy, mode: str,
                      norm_axis: str = "seen") -> SimilarityMatrix:
    """Affinity of each candidate type with every seen type.

    Entry (i, j) is exp(-d(f_i, f_j)) normalized, with d the Euclidean
    distance between label representations; i ranges over seen types and j
    over the candidates (the seen types themselves in "training" mode, the
    unseen types in "zeroshot" mode). The default normalization makes each
    candidate column a distribution over seen types; "candidate" instead
    normalizes each seen row across candidates.
    """
    if mode not in ("training", "zeroshot"):
        raise ValueError(f"mode must be 'training' or 'zeroshot', got {mode!r}")
    if norm_axis not in ("seen", "candidate"):
        raise ValueError(f"norm_axis must be 'seen' or 'candidate', got {norm_axis!r}")
    f_seen = bank.f_seen(h)
    cand = f_seen if mode == "training" else bank.f_unseen(h)
    if cand.shape[0] == 0:
        raise DimensionError(f"no candidate labels for mode {mode!r}")
    diff = f_seen[:, None, :] - cand[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    axis = 0 if norm_axis == "seen" else 1
    shifted = np.exp(-(dist - dist.min(axis=axis, keepdims=True)))
    r = shifted / shifted.sum(axis=axis, keepdims=True)
    return SimilarityMatrix(r=r, mode=mode, norm_axis=norm_axis)
