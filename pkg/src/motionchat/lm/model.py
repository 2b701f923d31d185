"""Decoder-only causal transformer over the unified multimodal vocabulary."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
import torch.nn as nn

from ..errors import ContextOverflow, IndexOutOfRange


@dataclass
class TransformerConfig:
    vocab_size: int
    layers: int = 4
    heads: int = 4
    model_dim: int = 128
    ff_dim: int = 512
    max_context: int = 1024
    dropout: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ValueError("model_dim must be divisible by heads")


def _rope_angles(head_dim: int, positions: torch.Tensor, dtype, device):
    half = head_dim // 2
    inv_freq = 1.0 / (10000.0 ** (torch.arange(half, dtype=torch.float64)
                                  / half)).to(device)
    ang = positions.to(torch.float64)[:, None] * inv_freq[None, :]
    return ang.cos().to(dtype), ang.sin().to(dtype)


def _apply_rope(x: torch.Tensor, cos: torch.Tensor, sin: torch.Tensor):
    # x: (B, H, T, hd); rotate pairs (even, odd)
    x1, x2 = x[..., 0::2], x[..., 1::2]
    out = torch.empty_like(x)
    out[..., 0::2] = x1 * cos - x2 * sin
    out[..., 1::2] = x1 * sin + x2 * cos
    return out


class CausalSelfAttention(nn.Module):
    def __init__(self, cfg: TransformerConfig):
        super().__init__()
        self.heads = cfg.heads
        self.head_dim = cfg.model_dim // cfg.heads
        self.q_proj = nn.Linear(cfg.model_dim, cfg.model_dim)
        self.k_proj = nn.Linear(cfg.model_dim, cfg.model_dim)
        self.v_proj = nn.Linear(cfg.model_dim, cfg.model_dim)
        self.o_proj = nn.Linear(cfg.model_dim, cfg.model_dim)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x: torch.Tensor, pos0: int = 0, cache: dict | None = None):
        b, t, d = x.shape
        def split(proj):
            return proj.reshape(b, t, self.heads, self.head_dim).transpose(1, 2)
        q = split(self.q_proj(x))
        k = split(self.k_proj(x))
        v = split(self.v_proj(x))
        positions = torch.arange(pos0, pos0 + t, device=x.device)
        cos, sin = _rope_angles(self.head_dim, positions, x.dtype, x.device)
        q = _apply_rope(q, cos, sin)
        k = _apply_rope(k, cos, sin)
        if cache is not None:
            if "k" in cache:
                k = torch.cat([cache["k"], k], dim=2)
                v = torch.cat([cache["v"], v], dim=2)
            cache["k"], cache["v"] = k, v
        att = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        t_k = k.shape[2]
        # causal mask: query at absolute position pos0+i sees keys 0..pos0+i
        mask = torch.arange(t_k, device=x.device)[None, :] > (
            pos0 + torch.arange(t, device=x.device))[:, None]
        att = att.masked_fill(mask, float("-inf"))
        att = torch.softmax(att, dim=-1)
        att = self.drop(att)
        out = (att @ v).transpose(1, 2).reshape(b, t, d)
        return self.o_proj(out)


class Block(nn.Module):
    def __init__(self, cfg: TransformerConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.model_dim)
        self.attn = CausalSelfAttention(cfg)
        self.ln2 = nn.LayerNorm(cfg.model_dim)
        self.mlp = nn.Sequential(
            nn.Linear(cfg.model_dim, cfg.ff_dim), nn.GELU(),
            nn.Linear(cfg.ff_dim, cfg.model_dim), nn.Dropout(cfg.dropout))

    def forward(self, x, pos0: int = 0, cache: dict | None = None):
        x = x + self.attn(self.ln1(x), pos0=pos0, cache=cache)
        return x + self.mlp(self.ln2(x))


class CausalTransformer(nn.Module):
    def __init__(self, cfg: TransformerConfig):
        super().__init__()
        self.cfg = cfg
        torch.manual_seed(cfg.seed)
        self.embed = nn.Embedding(cfg.vocab_size, cfg.model_dim)
        self.blocks = nn.ModuleList([Block(cfg) for _ in range(cfg.layers)])
        self.ln_f = nn.LayerNorm(cfg.model_dim)
        self.head = nn.Linear(cfg.model_dim, cfg.vocab_size, bias=False)
        for module in self.modules():
            if isinstance(module, (nn.Linear, nn.Embedding)):
                nn.init.normal_(module.weight, mean=0.0, std=0.02)
                if isinstance(module, nn.Linear) and module.bias is not None:
                    nn.init.zeros_(module.bias)

    def forward(self, tokens: torch.Tensor, pos0: int = 0,
                caches: list[dict] | None = None) -> torch.Tensor:
        """tokens: (B, T) or (T,) long -> logits (B, T, vocab) or (T, vocab)."""
        squeeze = tokens.dim() == 1
        if squeeze:
            tokens = tokens.unsqueeze(0)
        t = tokens.shape[1]
        if pos0 + t > self.cfg.max_context:
            raise ContextOverflow(
                f"sequence of {pos0 + t} exceeds max_context {self.cfg.max_context}")
        if t and int(tokens.max()) >= self.cfg.vocab_size:
            raise IndexOutOfRange(f"token {int(tokens.max())} outside vocab")
        x = self.embed(tokens)
        for i, block in enumerate(self.blocks):
            x = block(x, pos0=pos0, cache=None if caches is None else caches[i])
        logits = self.head(self.ln_f(x))
        return logits.squeeze(0) if squeeze else logits

    def new_caches(self) -> list[dict]:
        return [{} for _ in self.blocks]

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def trainable_parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters() if p.requires_grad)

    def state(self) -> tuple[dict, dict]:
        config = asdict(self.cfg)
        tensors = {k: v.detach().cpu().numpy() for k, v in self.state_dict().items()}
        return config, tensors

    @staticmethod
    def from_state(config: dict, tensors: dict) -> "CausalTransformer":
        model = CausalTransformer(TransformerConfig(**config))
        model.load_state_dict({k: torch.as_tensor(v.copy())
                               for k, v in tensors.items()})
        model.eval()
        return model
