"""Pretrained word vectors, precomputed contextual embeddings, char vocabulary.

Word vectors come from the usual ``token f f f ...`` text format. Contextual
token embeddings are ingested from a two-file container produced offline by
any embedding tool: an index of ``sentence_key\\toffset\\ttoken_count`` lines
plus a payload of raw little-endian float32 rows. A seeded synthetic store
stands in when no container is available, so the full pipeline can run
without an upstream model.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, EmbeddingError, SpanError


def make_oov_vector(dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.25, 0.25, size=dim)


class WordVectorStore:
    """Token -> vector map with a deterministic out-of-vocabulary fallback."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray],
                 oov_vector: np.ndarray, skipped: int = 0):
        self.dim = dim
        self._vectors = vectors
        self.oov_vector = oov_vector
        self.skipped = skipped

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, token: str) -> bool:
        return token in self._vectors or token.lower() in self._vectors

    def get(self, token: str) -> np.ndarray:
        vec = self._vectors.get(token)
        if vec is None:
            vec = self._vectors.get(token.lower())
        return vec if vec is not None else self.oov_vector


def load_word_vectors(path, dim: int | None = None, oov_seed: int = 0) -> WordVectorStore:
    """Read a word-vector text file, skipping malformed lines.

    The width is taken from the first parseable line unless given; lines
    with a different float count (including word2vec-style headers) are
    skipped and counted in ``store.skipped``.
    """
    vectors: dict[str, np.ndarray] = {}
    skipped = 0
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                if line.strip():
                    skipped += 1
                continue
            token = parts[0]
            try:
                vec = np.array([float(tok) for tok in parts[1:] if tok])
            except ValueError:
                skipped += 1
                continue
            if dim is None:
                dim = vec.size
            if vec.size != dim or not token:
                skipped += 1
                continue
            vectors[token] = vec
    if not vectors:
        raise EmbeddingError(f"{path}: no usable word vectors")
    return WordVectorStore(dim=dim, vectors=vectors,
                           oov_vector=make_oov_vector(dim, oov_seed), skipped=skipped)


# ---------------------------------------------------------------------------
# contextual embeddings


class ContextualStore:
    """Sentence-keyed contextual token matrices backed by an offline container."""

    def __init__(self, dim: int, index: dict[str, tuple[int, int]], payload: np.ndarray):
        self.dim = dim
        self._index = index
        self._payload = payload  # flat float32 view of the payload file

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def __len__(self) -> int:
        return len(self._index)

    def matrix(self, key: str, expected_tokens: int | None = None) -> np.ndarray:
        entry = self._index.get(key)
        if entry is None:
            raise EmbeddingError(f"no contextual embedding for sentence key {key!r}")
        offset, count = entry
        if expected_tokens is not None and count != expected_tokens:
            raise AlignmentError(
                f"sentence {key!r}: {count} contextual rows for {expected_tokens} tokens"
            )
        start = offset // 4
        flat = self._payload[start:start + count * self.dim]
        return np.asarray(flat, dtype=np.float64).reshape(count, self.dim)


def load_contextual(index_path, payload_path, dim: int = 768) -> ContextualStore:
    index: dict[str, tuple[int, int]] = {}
    with open(index_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise EmbeddingError(f"{index_path}:{lineno}: expected key\\toffset\\tcount")
            key, offset_s, count_s = parts
            try:
                offset, count = int(offset_s), int(count_s)
            except ValueError as exc:
                raise EmbeddingError(f"{index_path}:{lineno}: {exc}") from None
            if offset % 4 != 0 or offset < 0 or count < 0:
                raise EmbeddingError(f"{index_path}:{lineno}: bad offset/count")
            index[key] = (offset, count)
    payload = np.memmap(payload_path, dtype="<f4", mode="r")
    nbytes = payload.size * 4
    for key, (offset, count) in index.items():
        if offset + count * dim * 4 > nbytes:
            raise EmbeddingError(
                f"{index_path}: entry {key!r} overruns the payload "
                f"({offset} + {count}x{dim} floats > {nbytes} bytes)"
            )
    return ContextualStore(dim=dim, index=index, payload=payload)


def write_contextual(index_path, payload_path, items) -> None:
    """Write (key, matrix) pairs into the index + payload container."""
    offset = 0
    with open(index_path, "w", encoding="utf-8") as idx, open(payload_path, "wb") as pay:
        for key, matrix in items:
            matrix = np.ascontiguousarray(matrix, dtype="<f4")
            idx.write(f"{key}\t{offset}\t{matrix.shape[0]}\n")
            pay.write(matrix.tobytes())
            offset += matrix.nbytes


class SyntheticContextualStore:
    """Deterministic pseudo-random stand-in for a contextual container.

    Matrices are seeded by (store seed, sentence key), so the same key always
    yields the same rows. Runs using this store are flagged in the manifest.
    """

    def __init__(self, dim: int, seed: int = 0, scale: float = 1.0):
        self.dim = dim
        self.seed = seed
        self.scale = scale

    def __contains__(self, key: str) -> bool:
        return True

    def matrix(self, key: str, expected_tokens: int | None = None) -> np.ndarray:
        if expected_tokens is None:
            raise EmbeddingError("synthetic contextual store needs the token count")
        digest = hashlib.sha256(f"{self.seed}:{key}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return self.scale * rng.standard_normal((expected_tokens, self.dim))


# ---------------------------------------------------------------------------
# character vocabulary


class CharVocab:
    """Character -> index map; index 0 is reserved for unknown characters."""

    def __init__(self, index: dict[str, int]):
        if 0 in index.values():
            raise ValueError("index 0 is reserved for unknown characters")
        self._index = dict(index)

    @classmethod
    def from_tokens(cls, tokens) -> "CharVocab":
        chars = sorted({ch for token in tokens for ch in token})
        return cls({ch: i + 1 for i, ch in enumerate(chars)})

    @property
    def size(self) -> int:
        """Embedding-table size: known characters plus the unknown slot."""
        return len(self._index) + 1

    def encode(self, token: str) -> list[int]:
        return [self._index.get(ch, 0) for ch in token]

    def to_json(self) -> str:
        return json.dumps(self._index, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CharVocab":
        return cls(json.loads(text))


# ---------------------------------------------------------------------------
# context windows


@dataclass
class ContextWindows:
    """Fixed-width windows flanking a mention, zero-padded at sentence edges."""

    left: np.ndarray         # (n, dim)
    left_mask: np.ndarray    # (n,) True where the row is a real token
    right: np.ndarray
    right_mask: np.ndarray


def context_window(sentence_embeddings: np.ndarray, mention_span: tuple[int, int],
                   n: int) -> ContextWindows:
    """The n token vectors before and after the span, in sentence order.

    Positions beyond the sentence boundary are zero rows with a False mask.
    """
    if n < 1:
        raise ValueError("window size must be >= 1")
    total = sentence_embeddings.shape[0]
    start, end = mention_span
    if not (0 <= start < end <= total):
        raise SpanError(f"span {mention_span} invalid for sentence of {total} tokens")
    dim = sentence_embeddings.shape[1]
    left = np.zeros((n, dim))
    left_mask = np.zeros(n, dtype=bool)
    for slot, pos in enumerate(range(start - n, start)):
        if pos >= 0:
            left[slot] = sentence_embeddings[pos]
            left_mask[slot] = True
    right = np.zeros((n, dim))
    right_mask = np.zeros(n, dtype=bool)
    for slot, pos in enumerate(range(end, end + n)):
        if pos < total:
            right[slot] = sentence_embeddings[pos]
            right_mask[slot] = True
    return ContextWindows(left=left, left_mask=left_mask, right=right, right_mask=right_mask)
