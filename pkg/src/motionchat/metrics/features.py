"""Motion feature sets for distribution metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ShapeMismatch
from ..motion.clip import MotionClip
from ..tokenizer.vqvae import ConvVqvae, extract_features


@dataclass
class FeatureSet:
    """N x d feature matrix tagged with the extractor that produced it."""

    features: np.ndarray
    extractor_id: str

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ShapeMismatch(f"features must be (N, d), got {self.features.shape}")
        if not np.isfinite(self.features).all():
            raise ValueError("features must be finite")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def motion_feature_set(clips: list[MotionClip], body_vqvae: ConvVqvae,
                       extractor_id: str | None = None) -> FeatureSet:
    """Mean-pooled pre-quantization features of the frozen body tokenizer
    encoder; comparable only within one extractor id."""
    feats = []
    with torch.no_grad():
        for clip in clips:
            raw = extract_features(clip, "body")
            ds = body_vqvae.cfg.temporal_downsample
            t_use = (raw.shape[0] // ds) * ds
            x = torch.as_tensor(raw[:t_use]).unsqueeze(0)
            z = body_vqvae.encode_features(body_vqvae.normalize(x))
            feats.append(z[0].mean(dim=0).numpy())
    eid = extractor_id or f"body-vqvae-d{body_vqvae.cfg.code_dim}"
    return FeatureSet(features=np.stack(feats), extractor_id=eid)
