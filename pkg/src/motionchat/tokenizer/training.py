"""VQ-VAE training loops with EMA codebook updates."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import torch

from ..errors import EmptyDataset
from ..motion.clip import MotionClip, RelativeTransform
from .vqvae import ConvVqvae, TransformVqvae, VqvaeConfig, extract_features, vq_loss


def write_loss_log(rows: list[dict], path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["step", "l_r", "l_e", "l_c", "l_v", "usage"])
        writer.writeheader()
        writer.writerows(rows)


def _cosine_lr(opt, base_lr: float, step: int, total: int, warmup: int = 10):
    if step < warmup:
        lr = base_lr * (step + 1) / warmup
    else:
        frac = (step - warmup) / max(1, total - warmup)
        lr = base_lr * (0.1 + 0.9 * 0.5 * (1 + np.cos(np.pi * frac)))
    for group in opt.param_groups:
        group["lr"] = lr


def _normalization(feats: np.ndarray):
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    # floor relative to the most-varying dim so near-constant dims are not
    # amplified into dominant reconstruction targets
    floor = max(float(std.max()) * 0.05, 1e-8)
    std = np.maximum(std, floor)
    return mean.astype(np.float32), std.astype(np.float32)


def train_vqvae(dataset: list[MotionClip], config: VqvaeConfig, seed: int,
                steps: int = 300, batch_size: int = 32):
    """Train a body or hand conv tokenizer on fixed-length windows.

    Deterministic given seed (single-threaded). Returns (model, log rows);
    log rows carry per-step loss parts plus the fraction of codebook entries
    assigned at least once so far.
    """
    if not dataset:
        raise EmptyDataset("no clips to train on")
    usable = [c for c in dataset if c.frames >= config.window]
    if not usable:
        raise EmptyDataset(f"no clip has >= {config.window} frames")

    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed)
    feats = [extract_features(c, config.part) for c in usable]
    config.in_dim = feats[0].shape[1]
    mean, std = _normalization(np.concatenate(feats, axis=0))
    model = ConvVqvae(config)
    model.feat_mean.copy_(torch.from_numpy(mean))
    model.feat_std.copy_(torch.from_numpy(std))
    opt = torch.optim.AdamW(
        list(model.encoder.parameters()) + list(model.decoder.parameters()),
        lr=config.lr)

    log = []
    for step in range(steps):
        _cosine_lr(opt, config.lr, step, steps)
        clips_idx = torch.randint(0, len(feats), (batch_size,), generator=gen)
        batch = []
        for ci in clips_idx:
            f = feats[int(ci)]
            start = int(torch.randint(0, f.shape[0] - config.window + 1, (1,),
                                      generator=gen))
            batch.append(f[start:start + config.window])
        x = model.normalize(torch.as_tensor(np.stack(batch)))
        if not bool(model.quantizer.initialized):
            with torch.no_grad():
                z0 = model.encode_features(x)
            model.quantizer.init_from(z0.reshape(-1, config.code_dim), gen)

        recon, z_e, code, idx = model(x)
        total, parts = vq_loss(x, recon, z_e, code, config)
        opt.zero_grad()
        total.backward()
        opt.step()
        model.quantizer.ema_step(z_e.detach().reshape(-1, config.code_dim),
                                 idx.reshape(-1), generator=gen)
        usage = float((model.quantizer.usage_count > 0).float().mean())
        log.append({"step": step,
                    "l_r": float(parts["l_r"].detach()),
                    "l_e": float(parts["l_e"].detach()),
                    "l_c": float(parts["l_c"].detach()),
                    "l_v": float(parts["l_v"].detach()),
                    "usage": usage})
    model.eval()
    return model, log


def train_transform_vqvae(transforms: list[RelativeTransform], config: VqvaeConfig,
                          seed: int, steps: int = 200, batch_size: int = 64):
    """Train the MLP transform tokenizer on whole-clip relative transforms."""
    if not transforms:
        raise EmptyDataset("no relative transforms to train on")
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed)
    feats = np.stack([t.feature() for t in transforms])
    config.in_dim = feats.shape[1]
    mean, std = _normalization(feats)
    model = TransformVqvae(config)
    model.feat_mean.copy_(torch.from_numpy(mean))
    model.feat_std.copy_(torch.from_numpy(std))
    opt = torch.optim.AdamW(
        list(model.encoder.parameters()) + list(model.decoder.parameters()),
        lr=config.lr)

    log = []
    for step in range(steps):
        _cosine_lr(opt, config.lr, step, steps)
        picks = torch.randint(0, feats.shape[0], (batch_size,), generator=gen)
        x = model.normalize(torch.as_tensor(feats[picks.numpy()]))
        if not bool(model.quantizer.initialized):
            with torch.no_grad():
                z0 = model.encoder(x)
            model.quantizer.init_from(z0, gen)
        recon, z_e, code, idx = model(x)
        # single-frame features have no temporal axis; insert one so l_v is 0
        total, parts = vq_loss(x.unsqueeze(1), recon.unsqueeze(1),
                               z_e.unsqueeze(1), code.unsqueeze(1), config)
        opt.zero_grad()
        total.backward()
        opt.step()
        model.quantizer.ema_step(z_e.detach(), idx, generator=gen)
        usage = float((model.quantizer.usage_count > 0).float().mean())
        log.append({"step": step,
                    "l_r": float(parts["l_r"].detach()),
                    "l_e": float(parts["l_e"].detach()),
                    "l_c": float(parts["l_c"].detach()),
                    "l_v": float(parts["l_v"].detach()),
                    "usage": usage})
    model.eval()
    return model, log
