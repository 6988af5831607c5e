"""Word vectors with a deterministic hashed fallback, mean pooling and cosine."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

DEFAULT_DIM = 64
DEFAULT_SEED = 42


class EmbeddingError(ValueError):
    pass


def _trigrams(word: str) -> list[str]:
    padded = f"<{word}>"
    if len(padded) < 3:
        return [padded]
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


def hashed_vector(word: str, dim: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Signed feature hashing of character trigrams, L2-normalized.

    blake2b keyed with the seed makes the result identical on every platform
    and Python version (unlike ``hash()``).
    """
    vec = np.zeros(dim, dtype=np.float64)
    key = seed.to_bytes(8, "little", signed=True)
    for gram in _trigrams(word):
        h = int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=key).digest(), "little")
        vec[h % dim] += 1.0 if (h >> 63) & 1 else -1.0
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # every trigram cancelled out; fall back to the word's own bucket
        h = int.from_bytes(hashlib.blake2b(word.encode("utf-8"), digest_size=8, key=key).digest(), "little")
        vec[h % dim] = 1.0
        return vec
    return vec / norm


@dataclass
class EmbeddingProvider:
    dim: int
    table: Mapping[str, np.ndarray] = field(default_factory=dict)
    fallback_enabled: bool = True
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.dim < 1:
            raise EmbeddingError("dim must be positive")
        for word, vec in self.table.items():
            if len(vec) != self.dim:
                raise EmbeddingError(f"vector for {word!r} has length {len(vec)}, expected {self.dim}")

    def fallback_vector(self, word: str) -> np.ndarray:
        if not self.fallback_enabled:
            raise EmbeddingError(f"no vector for {word!r} and fallback is disabled")
        return hashed_vector(word, self.dim, self.seed)

    def vector(self, word: str) -> np.ndarray:
        vec = self.table.get(word)
        if vec is None:
            vec = self.table.get(word.lower())
        if vec is None:
            return self.fallback_vector(word)
        return vec


def load_vectors(path, fallback_enabled: bool = True, seed: int = DEFAULT_SEED) -> EmbeddingProvider:
    """Whitespace-separated ``word f1 f2 ... fd`` lines; d comes from the first line."""
    table = {}
    dim = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            word, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as e:
                raise EmbeddingError(f"{path}:{lineno}: {e}") from None
            if dim is None:
                if not values:
                    raise EmbeddingError(f"{path}:{lineno}: no vector values")
                dim = len(values)
            elif len(values) != dim:
                raise EmbeddingError(f"{path}:{lineno}: {len(values)} values, expected {dim}")
            table[word] = vec
    if dim is None:
        raise EmbeddingError(f"{path}: no vectors")
    return EmbeddingProvider(dim, table, fallback_enabled, seed)


def phrase_embedding(provider: EmbeddingProvider, words: Sequence[str]) -> np.ndarray:
    """Mean of the word vectors."""
    if not words:
        raise EmbeddingError("empty phrase")
    return np.mean(np.stack([provider.vector(w) for w in words]), axis=0)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("cosine of a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
