from .codebook import Codebook, quantize, quantize_batch, rvq_quantize
from .tokens import MotionTokens
from .training import train_transform_vqvae, train_vqvae, write_loss_log
from .vqvae import (ConvVqvae, EmaVectorQuantizer, MotionTokenizerSet,
                    TransformVqvae, VqvaeConfig, extract_features,
                    features_to_clip, vq_loss)

__all__ = [
    "Codebook", "quantize", "quantize_batch", "rvq_quantize", "MotionTokens",
    "train_vqvae", "train_transform_vqvae", "write_loss_log",
    "ConvVqvae", "EmaVectorQuantizer", "MotionTokenizerSet", "TransformVqvae",
    "VqvaeConfig", "extract_features", "features_to_clip", "vq_loss",
]
