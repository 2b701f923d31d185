"""Local deterministic text embedder and the motion retrieval index."""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyIndex
from ..motion.clip import MotionTextEntry

_WORD = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> list[str]:
    words = _WORD.findall(text.lower())
    grams = list(words)
    grams += [f"{a} {b}" for a, b in zip(words, words[1:])]
    return grams


def _slot(gram: str, dim: int) -> tuple[int, float]:
    h = int.from_bytes(hashlib.blake2b(gram.encode(), digest_size=8).digest(),
                       "little")
    return h % dim, 1.0 if (h >> 63) & 1 else -1.0


@dataclass
class HashedTfidfEmbedder:
    """Hashed TF-IDF over word 1-2-grams, L2-normalized, 512 dims."""

    dim: int = 512
    idf: dict = field(default_factory=dict)
    n_docs: int = 0

    def fit(self, corpus: list[str]) -> "HashedTfidfEmbedder":
        df: dict[str, int] = {}
        for doc in corpus:
            for gram in set(_tokens(doc)):
                df[gram] = df.get(gram, 0) + 1
        self.n_docs = len(corpus)
        self.idf = {g: math.log((1 + self.n_docs) / (1 + c)) + 1.0
                    for g, c in df.items()}
        return self

    def embed(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        counts: dict[str, int] = {}
        for gram in _tokens(text):
            counts[gram] = counts.get(gram, 0) + 1
        for gram, tf in counts.items():
            slot, sign = _slot(gram, self.dim)
            v[slot] += sign * tf * self.idf.get(gram, 1.0)
        n = np.linalg.norm(v)
        return v / n if n > 1e-12 else v


@dataclass
class EmbeddingIndex:
    """motion_id -> unit-norm embedding."""

    dimension: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def add(self, motion_id: str, vector: np.ndarray):
        n = np.linalg.norm(vector)
        if n > 1e-12:
            vector = vector / n
        self.entries[motion_id] = vector

    def __len__(self):
        return len(self.entries)


def build_index(entries: list[MotionTextEntry], embedder) -> EmbeddingIndex:
    index = EmbeddingIndex(dimension=getattr(embedder, "dim", 0))
    for e in entries:
        caption = e.consolidated_caption or "; ".join(e.captions) or e.motion_id
        index.add(e.motion_id, embedder.embed(caption))
    return index


def retrieve_motion(description: str, index: EmbeddingIndex, k: int, embedder
                    ) -> list[tuple[str, float]]:
    """Top-k by cosine similarity, descending; ties break lexically by id."""
    if len(index) == 0:
        raise EmptyIndex("retrieval over an empty index")
    if k < 1:
        raise ValueError("k must be >= 1")
    q = embedder.embed(description)
    scored = [(motion_id, float(q @ vec))
              for motion_id, vec in index.entries.items()]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]
