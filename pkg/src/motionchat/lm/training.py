"""LM training step and optimizer plumbing."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import AllMasked, ShapeMismatch
from .model import CausalTransformer


def make_optimizer(model, lr: float, weight_decay: float = 0.01):
    params = [p for p in model.parameters() if p.requires_grad]
    return torch.optim.AdamW(params, lr=lr, weight_decay=weight_decay)


def set_cosine_lr(opt, base_lr: float, step: int, total: int, warmup: int = 20):
    if step < warmup:
        lr = base_lr * (step + 1) / warmup
    else:
        frac = (step - warmup) / max(1, total - warmup)
        lr = base_lr * (0.1 + 0.9 * 0.5 * (1 + math.cos(math.pi * frac)))
    for group in opt.param_groups:
        group["lr"] = lr
    return lr


def masked_loss(model: CausalTransformer, tokens: torch.Tensor,
                mask: torch.Tensor) -> torch.Tensor:
    """Mean next-token cross-entropy over mask-true positions.

    mask[b, p] supervises the prediction of tokens[b, p+1]; the final column
    must therefore be False. Mask-false positions contribute exactly zero
    gradient (their logits never enter the loss).
    """
    if tokens.shape != mask.shape:
        raise ShapeMismatch(f"tokens {tuple(tokens.shape)} vs mask {tuple(mask.shape)}")
    if mask[..., -1].any():
        raise ShapeMismatch("mask true at the last position (nothing to predict)")
    if not bool(mask.any()):
        raise AllMasked("no supervised position in batch")
    logits = model(tokens)
    b, t, v = logits.shape
    pred_pos = mask[:, :-1]
    sel_logits = logits[:, :-1][pred_pos]
    sel_targets = tokens[:, 1:][pred_pos]
    return F.cross_entropy(sel_logits, sel_targets)


def train_step(model: CausalTransformer, tokens: torch.Tensor, mask: torch.Tensor,
               optimizer) -> float:
    loss = masked_loss(model, tokens, mask)
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return float(loss.detach())


@torch.no_grad()
def masked_accuracy(model: CausalTransformer, tokens: torch.Tensor,
                    mask: torch.Tensor) -> float:
    """Fraction of supervised next-token predictions where argmax is correct."""
    logits = model(tokens)
    pred_pos = mask[:, :-1]
    if not bool(pred_pos.any()):
        raise AllMasked("no supervised position")
    pred = logits[:, :-1][pred_pos].argmax(dim=-1)
    return float((pred == tokens[:, 1:][pred_pos]).float().mean())


def pad_batch(seqs: list[list[int]], masks: list[list[bool]], pad_token: int):
    """Right-pad to a rectangle; padding is never supervised."""
    if len(seqs) != len(masks):
        raise ShapeMismatch("seqs and masks differ in count")
    width = max(len(s) for s in seqs)
    tokens = torch.full((len(seqs), width), pad_token, dtype=torch.long)
    mask = torch.zeros((len(seqs), width), dtype=torch.bool)
    for i, (s, m) in enumerate(zip(seqs, masks)):
        if len(s) != len(m):
            raise ShapeMismatch(f"sequence {i}: tokens {len(s)} vs mask {len(m)}")
        tokens[i, :len(s)] = torch.tensor(s, dtype=torch.long)
        mask[i, :len(m)] = torch.tensor(m, dtype=torch.bool)
    return tokens, mask


def write_training_log(rows: list[dict], path):
    import csv
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        rows = [{"step": 0, "loss": float("nan")}]
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def save_generation_trace(events, path):
    """token, timestamp_ns per line (latency-harness input format)."""
    with open(path, "w", encoding="utf-8") as f:
        for ev in events:
            f.write(f"{ev.token} {ev.timestamp_ns}\n")


def load_generation_trace(path) -> list[tuple[int, int]]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            tok, ts = line.split()
            out.append((int(tok), int(ts)))
    return out
