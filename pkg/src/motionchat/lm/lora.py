"""Low-rank adapters on attention query/value projections."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from ..errors import AlreadyAttached
from .model import CausalSelfAttention, CausalTransformer


@dataclass
class LoraConfig:
    rank: int = 8
    alpha: float = 16.0
    targets: tuple[str, ...] = ("q_proj", "v_proj")
    dropout: float = 0.0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")


class LoraLinear(nn.Module):
    """Frozen base linear plus trainable (alpha/rank) * B A x.

    B starts at zero, so a freshly attached adapter leaves the forward pass
    bitwise identical to the base layer.
    """

    def __init__(self, base: nn.Linear, cfg: LoraConfig):
        super().__init__()
        self.base = base
        self.scale = cfg.alpha / cfg.rank
        self.lora_a = nn.Parameter(
            torch.randn(cfg.rank, base.in_features, dtype=base.weight.dtype) * 0.02)
        self.lora_b = nn.Parameter(
            torch.zeros(base.out_features, cfg.rank, dtype=base.weight.dtype))
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x):
        return self.base(x) + self.scale * (self.drop(x) @ self.lora_a.t()
                                            @ self.lora_b.t())

    def merged_weight(self) -> torch.Tensor:
        return self.base.weight + self.scale * (self.lora_b @ self.lora_a)


def lora_attach(model: CausalTransformer, cfg: LoraConfig) -> CausalTransformer:
    """Freeze all base weights and add trainable adapters to the targets."""
    for module in model.modules():
        if isinstance(module, LoraLinear):
            raise AlreadyAttached("adapters already attached")
    for p in model.parameters():
        p.requires_grad_(False)
    torch.manual_seed(model.cfg.seed + 104729)
    for module in model.modules():
        if isinstance(module, CausalSelfAttention):
            for name in cfg.targets:
                setattr(module, name, LoraLinear(getattr(module, name), cfg))
    return model


def lora_merge(model: CausalTransformer) -> CausalTransformer:
    """Fold adapters into base weights and restore plain linear layers."""
    for module in model.modules():
        if isinstance(module, CausalSelfAttention):
            for name in ("q_proj", "k_proj", "v_proj", "o_proj"):
                layer = getattr(module, name)
                if isinstance(layer, LoraLinear):
                    with torch.no_grad():
                        layer.base.weight.copy_(layer.merged_weight())
                    setattr(module, name, layer.base)
    for p in model.parameters():
        p.requires_grad_(True)
    return model


def lora_parameter_count(model: CausalTransformer) -> int:
    return sum(p.numel() for m in model.modules() if isinstance(m, LoraLinear)
               for p in (m.lora_a, m.lora_b))
