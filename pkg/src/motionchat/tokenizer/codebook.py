"""Codebooks and nearest-neighbor quantization (plain and residual)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimMismatch


@dataclass
class Codebook:
    """Learned embedding table mapping continuous features to discrete indices."""

    entries: np.ndarray  # (K, d)
    usage_count: np.ndarray = field(default=None)  # (K,) cumulative assignments

    def __post_init__(self):
        self.entries = np.asarray(self.entries)
        if self.entries.ndim != 2 or self.entries.shape[0] < 2 or self.entries.shape[1] < 1:
            raise ValueError(f"entries must be (K>=2, d>=1), got {self.entries.shape}")
        if not np.isfinite(self.entries).all():
            raise ValueError("codebook entries must be finite")
        if self.usage_count is None:
            self.usage_count = np.zeros(self.entries.shape[0], dtype=np.int64)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def quantize(feature, codebook: Codebook):
    """Nearest codebook entry by Euclidean distance; ties break to the lowest index.

    Returns (index, code) for a single d-vector.
    """
    feature = np.asarray(feature)
    if feature.shape != (codebook.dim,):
        raise DimMismatch(f"feature shape {feature.shape} != ({codebook.dim},)")
    d2 = ((codebook.entries - feature) ** 2).sum(axis=1)
    idx = int(np.argmin(d2))  # argmin returns the first (lowest) index on ties
    return idx, codebook.entries[idx].copy()


def quantize_batch(features, codebook: Codebook):
    """Vectorized quantize for (N, d) features; returns (indices, codes)."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[1] != codebook.dim:
        raise DimMismatch(f"features shape {features.shape} incompatible with dim {codebook.dim}")
    d2 = ((features[:, None, :] - codebook.entries[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, codebook.entries[idx].copy()


def rvq_quantize(feature, books: list[Codebook]):
    """Residual vector quantization across stacked codebooks.

    Layer k quantizes the residual left by layers 1..k-1. Returns
    (indices per layer, final residual); sum of codes + residual == feature.
    """
    feature = np.asarray(feature, dtype=np.float64)
    if not books:
        raise ValueError("need at least one codebook")
    dim = books[0].dim
    for b in books:
        if b.dim != dim:
            raise DimMismatch("all codebooks must share the feature dim")
    if feature.shape != (dim,):
        raise DimMismatch(f"feature shape {feature.shape} != ({dim},)")
    residual = feature.copy()
    indices = []
    for book in books:
        idx, code = quantize(residual, book)
        indices.append(idx)
        residual = residual - code
    return indices, residual
