"""VQ-VAE models: temporal-conv body/hand tokenizers and the MLP transform tokenizer."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn as nn

from ..errors import ClipTooShort, IndexOutOfRange, ShapeMismatch
from ..motion.clip import MotionClip, RelativeTransform
from .codebook import Codebook
from .tokens import MotionTokens


@dataclass
class VqvaeConfig:
    part: str = "body"  # body | hand | transform
    in_dim: int = 135
    codebook_size: int = 512
    code_dim: int = 64
    temporal_downsample: int = 4
    width: int = 64
    kernel_size: int = 5
    lambda_r: float = 1.0
    lambda_e: float = 1.0
    lambda_c: float = 0.25
    lambda_v: float = 0.5
    lr: float = 3e-3
    ema_decay: float = 0.99
    dead_code_steps: int = 256
    window: int = 32

    def __post_init__(self):
        for name in ("lambda_r", "lambda_e", "lambda_c", "lambda_v"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.temporal_downsample < 1:
            raise ValueError("temporal_downsample must be >= 1")
        if self.part != "transform" and self.window % self.temporal_downsample != 0:
            raise ValueError("temporal_downsample must divide the training window")


def vq_loss(inputs, reconstruction, encoder_out, code, weights: VqvaeConfig):
    """Weighted four-term tokenizer loss.

    l_r: reconstruction MSE; l_e: ||sg(encoder_out) - code||^2 mean;
    l_c: ||encoder_out - sg(code)||^2 mean; l_v: MSE of first temporal
    differences of reconstruction vs input (time is the second-to-last axis).
    Returns (total, parts dict).
    """
    if inputs.shape != reconstruction.shape:
        raise ShapeMismatch(f"input {tuple(inputs.shape)} vs recon {tuple(reconstruction.shape)}")
    if encoder_out.shape != code.shape:
        raise ShapeMismatch(f"encoder_out {tuple(encoder_out.shape)} vs code {tuple(code.shape)}")
    l_r = torch.mean((reconstruction - inputs) ** 2)
    l_e = torch.mean((encoder_out.detach() - code) ** 2)
    l_c = torch.mean((encoder_out - code.detach()) ** 2)
    if inputs.shape[-2] > 1:
        dv_in = inputs[..., 1:, :] - inputs[..., :-1, :]
        dv_out = reconstruction[..., 1:, :] - reconstruction[..., :-1, :]
        l_v = torch.mean((dv_out - dv_in) ** 2)
    else:
        l_v = torch.zeros((), dtype=inputs.dtype, device=inputs.device)
    total = (weights.lambda_r * l_r + weights.lambda_e * l_e
             + weights.lambda_c * l_c + weights.lambda_v * l_v)
    return total, {"l_r": l_r, "l_e": l_e, "l_c": l_c, "l_v": l_v}


class EmaVectorQuantizer(nn.Module):
    """EMA-updated codebook with straight-through estimator.

    Entries move as gamma*entry + (1-gamma)*batch_mean for assigned codes;
    entries unused for `dead_code_steps` consecutive steps are reset to a
    random feature from the current batch.
    """

    def __init__(self, size: int, dim: int, decay: float = 0.99,
                 dead_code_steps: int = 256):
        super().__init__()
        self.size = size
        self.dim = dim
        self.decay = decay
        self.dead_code_steps = dead_code_steps
        self.register_buffer("entries", torch.zeros(size, dim))
        self.register_buffer("usage_count", torch.zeros(size, dtype=torch.long))
        self.register_buffer("stale_steps", torch.zeros(size, dtype=torch.long))
        self.register_buffer("initialized", torch.zeros((), dtype=torch.bool))

    def init_from(self, flat: torch.Tensor, generator: torch.Generator):
        picks = torch.randint(0, flat.shape[0], (self.size,), generator=generator)
        with torch.no_grad():
            self.entries.copy_(flat[picks])
        self.initialized.fill_(True)

    def assign(self, flat: torch.Tensor) -> torch.Tensor:
        d2 = (flat.pow(2).sum(1, keepdim=True)
              - 2 * flat @ self.entries.t()
              + self.entries.pow(2).sum(1))
        return torch.argmin(d2, dim=1)  # first index on ties

    def forward(self, z_e: torch.Tensor):
        """z_e: (N, d). Returns (z_q_straight_through, indices, code)."""
        idx = self.assign(z_e)
        code = self.entries[idx]
        z_q = z_e + (code - z_e).detach()
        return z_q, idx, code

    @torch.no_grad()
    def ema_step(self, flat: torch.Tensor, idx: torch.Tensor,
                 generator: torch.Generator | None = None):
        onehot = torch.zeros(self.size, flat.shape[0], dtype=flat.dtype,
                             device=flat.device)
        onehot[idx, torch.arange(flat.shape[0])] = 1
        counts = onehot.sum(1)
        used = counts > 0
        means = onehot @ flat
        means[used] /= counts[used].unsqueeze(1)
        self.entries[used] = (self.decay * self.entries[used]
                              + (1 - self.decay) * means[used])
        self.usage_count += counts.long()
        self.stale_steps[used] = 0
        self.stale_steps[~used] += 1
        dead = self.stale_steps >= self.dead_code_steps
        if dead.any() and generator is not None:
            picks = torch.randint(0, flat.shape[0], (int(dead.sum()),),
                                  generator=generator)
            self.entries[dead] = flat[picks]
            self.stale_steps[dead] = 0

    def to_codebook(self) -> Codebook:
        return Codebook(entries=self.entries.detach().cpu().numpy().copy(),
                        usage_count=self.usage_count.cpu().numpy().copy())


def _stride2_stages(downsample: int) -> int:
    stages = int(round(math.log2(downsample)))
    if 2 ** stages != downsample:
        raise ValueError("temporal_downsample must be a power of two")
    return stages


class _ResBlock1d(nn.Module):
    def __init__(self, width: int, kernel: int):
        super().__init__()
        pad = kernel // 2
        groups = 8 if width % 8 == 0 else 1
        self.net = nn.Sequential(
            nn.GroupNorm(groups, width), nn.SiLU(),
            nn.Conv1d(width, width, kernel, padding=pad),
            nn.GroupNorm(groups, width), nn.SiLU(),
            nn.Conv1d(width, width, kernel, padding=pad),
        )

    def forward(self, x):
        return x + self.net(x)


class ConvVqvae(nn.Module):
    """Temporal 1D-conv VQ-VAE over per-frame motion features."""

    def __init__(self, cfg: VqvaeConfig):
        super().__init__()
        self.cfg = cfg
        k, w, d = cfg.kernel_size, cfg.width, cfg.code_dim
        pad = k // 2
        stages = _stride2_stages(cfg.temporal_downsample)
        enc = [nn.Conv1d(cfg.in_dim, w, k, padding=pad)]
        for _ in range(stages):
            enc += [_ResBlock1d(w, k), nn.Conv1d(w, w, 4, stride=2, padding=1)]
        enc += [_ResBlock1d(w, k), nn.Conv1d(w, d, k, padding=pad)]
        self.encoder = nn.Sequential(*enc)
        dec = [nn.Conv1d(d, w, k, padding=pad)]
        for _ in range(stages):
            dec += [_ResBlock1d(w, k), nn.ConvTranspose1d(w, w, 4, stride=2, padding=1)]
        dec += [_ResBlock1d(w, k), nn.Conv1d(w, cfg.in_dim, k, padding=pad)]
        self.decoder = nn.Sequential(*dec)
        self.quantizer = EmaVectorQuantizer(cfg.codebook_size, d, cfg.ema_decay,
                                            cfg.dead_code_steps)
        self.register_buffer("feat_mean", torch.zeros(cfg.in_dim))
        self.register_buffer("feat_std", torch.ones(cfg.in_dim))

    def normalize(self, x):
        return (x - self.feat_mean) / self.feat_std

    def denormalize(self, x):
        return x * self.feat_std + self.feat_mean

    def encode_features(self, feats: torch.Tensor):
        """feats: (B, T, in_dim) normalized. Returns (z_e (B, L, d), flat view)."""
        z = self.encoder(feats.transpose(1, 2)).transpose(1, 2)
        return z

    def decode_codes(self, codes: torch.Tensor) -> torch.Tensor:
        """codes: (B, L, d) -> reconstructed normalized features (B, L*ds, in_dim)."""
        return self.decoder(codes.transpose(1, 2)).transpose(1, 2)

    def forward(self, feats: torch.Tensor):
        """Normalized feats (B, T, in_dim) -> (recon, z_e, code, idx)."""
        z_e = self.encode_features(feats)
        b, length, d = z_e.shape
        z_q, idx, code = self.quantizer(z_e.reshape(b * length, d))
        recon = self.decode_codes(z_q.reshape(b, length, d))
        return recon, z_e, code.reshape(b, length, d), idx.reshape(b, length)

    @torch.no_grad()
    def encode_indices(self, feats_raw: np.ndarray) -> list[int]:
        """Raw (T, in_dim) float features -> token indices, trimming the tail."""
        ds = self.cfg.temporal_downsample
        t = feats_raw.shape[0]
        if t < ds:
            raise ClipTooShort(f"{t} frames < temporal_downsample {ds}")
        t_use = (t // ds) * ds
        x = torch.as_tensor(feats_raw[:t_use], dtype=self.feat_mean.dtype).unsqueeze(0)
        z_e = self.encode_features(self.normalize(x))
        idx = self.quantizer.assign(z_e.reshape(-1, z_e.shape[-1]))
        return [int(i) for i in idx]

    @torch.no_grad()
    def decode_indices(self, indices: list[int]) -> np.ndarray:
        """Token indices -> raw (len*ds, in_dim) features."""
        if any(not 0 <= i < self.cfg.codebook_size for i in indices):
            raise IndexOutOfRange(f"token outside [0, {self.cfg.codebook_size})")
        codes = self.quantizer.entries[torch.as_tensor(indices, dtype=torch.long)]
        recon = self.decode_codes(codes.unsqueeze(0))
        return self.denormalize(recon)[0].cpu().numpy()


class TransformVqvae(nn.Module):
    """MLP VQ-VAE for the whole-clip inter-character relative transform."""

    def __init__(self, cfg: VqvaeConfig):
        super().__init__()
        self.cfg = cfg
        w, d = cfg.width, cfg.code_dim
        self.encoder = nn.Sequential(nn.Linear(cfg.in_dim, w), nn.ReLU(),
                                     nn.Linear(w, w), nn.ReLU(), nn.Linear(w, d))
        self.decoder = nn.Sequential(nn.Linear(d, w), nn.ReLU(),
                                     nn.Linear(w, w), nn.ReLU(), nn.Linear(w, cfg.in_dim))
        self.quantizer = EmaVectorQuantizer(cfg.codebook_size, d, cfg.ema_decay,
                                            cfg.dead_code_steps)
        self.register_buffer("feat_mean", torch.zeros(cfg.in_dim))
        self.register_buffer("feat_std", torch.ones(cfg.in_dim))

    def normalize(self, x):
        return (x - self.feat_mean) / self.feat_std

    def denormalize(self, x):
        return x * self.feat_std + self.feat_mean

    def forward(self, feats: torch.Tensor):
        """Normalized feats (B, in_dim) -> (recon, z_e, code, idx)."""
        z_e = self.encoder(feats)
        z_q, idx, code = self.quantizer(z_e)
        recon = self.decoder(z_q)
        return recon, z_e, code, idx

    @torch.no_grad()
    def encode_index(self, feat_raw: np.ndarray) -> int:
        x = torch.as_tensor(feat_raw, dtype=self.feat_mean.dtype).reshape(1, -1)
        z_e = self.encoder(self.normalize(x))
        return int(self.quantizer.assign(z_e)[0])

    @torch.no_grad()
    def decode_index(self, index: int) -> np.ndarray:
        if not 0 <= index < self.cfg.codebook_size:
            raise IndexOutOfRange(f"token {index} outside [0, {self.cfg.codebook_size})")
        code = self.quantizer.entries[index].unsqueeze(0)
        return self.denormalize(self.decoder(code))[0].cpu().numpy()


def extract_features(clip: MotionClip, part: str) -> np.ndarray:
    """Per-frame features: body -> B*6 rotations + root (its stream carries
    translation); hand -> H*6 rotations."""
    if part == "body":
        flat = clip.body_rot.reshape(clip.frames, -1)
        return np.concatenate([flat, clip.root_transl], axis=1).astype(np.float32)
    if part == "hand":
        return clip.hand_rot.reshape(clip.frames, -1).astype(np.float32)
    raise ValueError(f"unknown part {part!r}")


def features_to_clip(body_feats: np.ndarray, hand_feats: np.ndarray,
                     body_joints: int, hand_joints: int, fps: float) -> MotionClip:
    frames = body_feats.shape[0]
    return MotionClip(
        fps=fps,
        body_rot=body_feats[:, :body_joints * 6].reshape(frames, body_joints, 6),
        hand_rot=hand_feats.reshape(frames, hand_joints, 6),
        root_transl=body_feats[:, body_joints * 6:],
    )


class MotionTokenizerSet:
    """Frozen body + hand + transform tokenizers acting on whole clips."""

    def __init__(self, body: ConvVqvae, hand: ConvVqvae, transform: TransformVqvae,
                 body_joints: int, hand_joints: int, fps: float):
        self.body = body.eval()
        self.hand = hand.eval()
        self.transform = transform.eval()
        self.body_joints = body_joints
        self.hand_joints = hand_joints
        self.fps = fps

    @property
    def downsample(self) -> int:
        return self.body.cfg.temporal_downsample

    def encode_motion(self, clip: MotionClip, rel: RelativeTransform) -> MotionTokens:
        """Independent (non-interleaved) body/hand streams plus one transform token."""
        body_idx = self.body.encode_indices(extract_features(clip, "body"))
        hand_idx = self.hand.encode_indices(extract_features(clip, "hand"))
        t_idx = self.transform.encode_index(rel.feature())
        return MotionTokens(body=body_idx, hand=hand_idx, transform=t_idx)

    def decode_motion(self, tokens: MotionTokens) -> tuple[MotionClip, RelativeTransform]:
        if len(tokens.body) != len(tokens.hand):
            raise ShapeMismatch("body and hand token streams differ in length")
        if not tokens.body:
            raise ShapeMismatch("cannot decode an empty motion token stream")
        body_feats = self.body.decode_indices(tokens.body)
        hand_feats = self.hand.decode_indices(tokens.hand)
        clip = features_to_clip(body_feats, hand_feats, self.body_joints,
                                self.hand_joints, self.fps)
        if tokens.transform is None:
            rel = RelativeTransform.identity()
        else:
            rel = RelativeTransform.from_feature(self.transform.decode_index(tokens.transform))
        return clip, rel

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        config = {
            "body": asdict(self.body.cfg), "hand": asdict(self.hand.cfg),
            "transform": asdict(self.transform.cfg),
            "body_joints": self.body_joints, "hand_joints": self.hand_joints,
            "fps": self.fps,
        }
        tensors = {}
        for name, model in (("body", self.body), ("hand", self.hand),
                            ("transform", self.transform)):
            for key, val in model.state_dict().items():
                tensors[f"{name}.{key}"] = val.cpu().numpy()
        return config, tensors

    @staticmethod
    def from_state(config: dict, tensors: dict[str, np.ndarray]) -> "MotionTokenizerSet":
        models = {}
        for name, cls in (("body", ConvVqvae), ("hand", ConvVqvae),
                          ("transform", TransformVqvae)):
            model = cls(VqvaeConfig(**config[name]))
            state = {k[len(name) + 1:]: torch.as_tensor(v.copy())
                     for k, v in tensors.items() if k.startswith(name + ".")}
            model.load_state_dict(state)
            models[name] = model
        return MotionTokenizerSet(models["body"], models["hand"], models["transform"],
                                  config["body_joints"], config["hand_joints"],
                                  config["fps"])
