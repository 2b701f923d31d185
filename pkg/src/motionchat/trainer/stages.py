"""The three-stage training pipeline."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch

from ..checkpoint import save_checkpoint
from ..errors import AllMasked, ConfigError
from ..lm.model import CausalTransformer
from ..lm.lora import LoraConfig, lora_attach
from ..lm.training import (make_optimizer, masked_accuracy, masked_loss,
                           pad_batch, set_cosine_lr, train_step,
                           write_training_log)
from ..motion.clip import MotionTextEntry
from ..template.codec import render_pretrain_task, render_with_spans, supervision_mask
from ..template.convo import Conversation
from ..template.vocab import VocabLayout
from ..tokenizer.training import train_transform_vqvae, train_vqvae, write_loss_log
from ..tokenizer.vqvae import MotionTokenizerSet
from .plan import StagePlan
from .tasks import FamilyMixer, TaskItem

log = logging.getLogger(__name__)


def run_stage1(entries: list[MotionTextEntry], rels, plan: StagePlan,
               out_dir) -> Path:
    """Train and freeze the body/hand/transform tokenizers; returns the
    checkpoint path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not entries:
        raise ConfigError("stage 1 needs a nonempty motion dataset")
    clips = [e.clip for e in entries]
    body, log_b = train_vqvae(clips, plan.vqvae_config("body"), seed=plan.seed,
                              steps=plan.stage1.steps,
                              batch_size=plan.stage1.batch_size)
    hand, log_h = train_vqvae(clips, plan.vqvae_config("hand"), seed=plan.seed + 1,
                              steps=plan.stage1.steps,
                              batch_size=plan.stage1.batch_size)
    transforms = list(rels.values()) if isinstance(rels, dict) else list(rels)
    tf, log_t = train_transform_vqvae(transforms, plan.vqvae_config("transform"),
                                      seed=plan.seed + 2,
                                      steps=max(100, plan.stage1.steps // 2),
                                      batch_size=plan.stage1.batch_size)
    toks = MotionTokenizerSet(body, hand, tf,
                              body_joints=clips[0].body_joints,
                              hand_joints=clips[0].hand_joints,
                              fps=clips[0].fps)
    config, tensors = toks.state()
    path = out_dir / "tokenizers.ckpt"
    save_checkpoint(path, "motion-tokenizer", config, tensors)
    for name, rows in (("body", log_b), ("hand", log_h), ("transform", log_t)):
        write_loss_log(rows, out_dir / f"stage1_{name}.csv")
    return path


def _render_items(items: list[TaskItem], layout: VocabLayout):
    seqs, masks = [], []
    for item in items:
        tokens, mask = render_pretrain_task(item.task_id, item.inputs,
                                            item.output, layout)
        seqs.append(tokens)
        masks.append(mask)
    return seqs, masks


def run_stage2(task_items: dict[str, list[TaskItem]], plan: StagePlan,
               out_dir, deterministic: bool = True) -> Path:
    """Multi-task pretraining for modality alignment; returns checkpoint path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    layout = plan.layout
    cfg = plan.transformer_config()
    if deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(plan.seed)
    model = CausalTransformer(cfg)
    opt = make_optimizer(model, plan.stage2.lr)
    mixer = FamilyMixer(task_items, seed=plan.seed,
                        motion_ratio=plan.stage2.motion_ratio,
                        disabled_tasks=plan.stage2.disabled_tasks)
    pad = layout.special("PAD")
    rows = []
    skipped = 0
    for step in range(plan.stage2.steps):
        set_cosine_lr(opt, plan.stage2.lr, step, plan.stage2.steps)
        family, items = mixer.draw(plan.stage2.batch_size)
        seqs, masks = _render_items(items, layout)
        keep = [i for i, s in enumerate(seqs) if len(s) <= cfg.max_context]
        if len(keep) < len(seqs):
            skipped += len(seqs) - len(keep)
            log.warning("stage2 step %d: skipped %d oversized sequences",
                        step, len(seqs) - len(keep))
            seqs = [seqs[i] for i in keep]
            masks = [masks[i] for i in keep]
        if not seqs:
            continue
        tokens, mask = pad_batch(seqs, masks, pad)
        loss = train_step(model, tokens, mask, opt)
        rows.append({"step": step, "family": family,
                     "task": items[0].task_id, "loss": loss})
    write_training_log(rows, out_dir / "stage2_log.csv")
    config, tensors = model.state()
    path = out_dir / "stage2.ckpt"
    save_checkpoint(path, "lm", config, tensors,
                    extra={"layout": layout.to_dict(), "skipped": skipped})
    return path


def split_dataset(n: int, ratio: tuple[int, int], seed: int):
    """Deterministic 9:1-style split: (train indices, test indices)."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = int(round(n * ratio[0] / (ratio[0] + ratio[1])))
    return sorted(order[:n_train].tolist()), sorted(order[n_train:].tolist())


def audit_mask(tokens: list[int], mask: list[bool], layout: VocabLayout):
    """Independent check that no supervised position predicts a token of a
    user turn or the system block; scans raw tokens only."""
    role_user = layout.special("ROLE_USER")
    role_char = layout.special("ROLE_CHAR")
    eot = layout.special("EOT")
    in_char = False
    char_positions = set()
    for i, t in enumerate(tokens):
        if t == role_char:
            in_char = True
            continue  # the role marker itself is context, not supervised
        if t == role_user:
            in_char = False
        if in_char:
            char_positions.add(i)
            if t == eot:
                in_char = False
    for p, m in enumerate(mask):
        if m and (p + 1 not in char_positions):
            raise AssertionError(
                f"supervised position {p} predicts token outside character turns")


def render_dialogues(dialogues: list[Conversation], layout: VocabLayout,
                     max_context: int):
    """Rendered (tokens, mask) pairs; oversized conversations are dropped with
    a counted skip, never truncated."""
    rendered = []
    skipped = 0
    for conv in dialogues:
        tokens = render_with_spans(conv, layout)[0]
        if len(tokens) > max_context:
            skipped += 1
            continue
        mask = supervision_mask(conv, layout)
        if not any(mask):
            skipped += 1
            continue
        rendered.append((tokens, mask))
    if skipped:
        log.warning("dropped %d dialogues (oversized or without character turns)",
                    skipped)
    return rendered, skipped


def run_stage3(dialogues: list[Conversation], plan: StagePlan, out_dir,
               init_checkpoint: Path | None = None, deterministic: bool = True,
               audit: bool = True) -> dict:
    """Instruction tuning on multi-round dialogues (full or LoRA).

    Supplying init_checkpoint=None reproduces the no-pretraining arm.
    Returns {checkpoint, train_loss, held_out_loss, train_accuracy, ...}.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    layout = plan.layout
    cfg = plan.transformer_config()
    if deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(plan.seed)
    if init_checkpoint is not None:
        from ..checkpoint import load_checkpoint

        ck = load_checkpoint(init_checkpoint, expect_kind="lm")
        model = CausalTransformer.from_state(ck.config, ck.tensors)
        model.train()
    else:
        model = CausalTransformer(cfg)
    if plan.stage3.mode == "lora":
        lora_attach(model, LoraConfig(rank=plan.stage3.lora_rank,
                                      alpha=plan.stage3.lora_alpha))
    opt = make_optimizer(model, plan.stage3.lr)

    rendered, skipped = render_dialogues(dialogues, layout, cfg.max_context)
    if not rendered:
        raise ConfigError("no dialogue fits max_context")
    train_idx, test_idx = split_dataset(len(rendered), plan.stage3.split, plan.seed)
    train_set = [rendered[i] for i in train_idx]
    test_set = [rendered[i] for i in test_idx]
    pad = layout.special("PAD")
    gen = np.random.default_rng(plan.seed + 17)
    rows = []
    for step in range(plan.stage3.steps):
        set_cosine_lr(opt, plan.stage3.lr, step, plan.stage3.steps)
        picks = gen.integers(0, len(train_set), plan.stage3.batch_size)
        batch = [train_set[int(i)] for i in picks]
        if audit:
            for tokens, mask in batch:
                audit_mask(tokens, mask, layout)
        tokens, mask = pad_batch([b[0] for b in batch], [b[1] for b in batch], pad)
        loss = train_step(model, tokens, mask, opt)
        rows.append({"step": step, "loss": loss})
    write_training_log(rows, out_dir / "stage3_log.csv")

    model.eval()
    result = {
        "train_loss": evaluate_loss(model, train_set, pad),
        "held_out_loss": evaluate_loss(model, test_set, pad) if test_set else None,
        "train_accuracy": evaluate_accuracy(model, train_set, pad),
        "skipped": skipped,
        "n_train": len(train_set),
        "n_test": len(test_set),
    }
    config, tensors = model.state()
    path = out_dir / ("stage3_lora.ckpt" if plan.stage3.mode == "lora"
                      else "stage3.ckpt")
    if plan.stage3.mode == "lora":
        from ..lm.lora import lora_merge

        lora_merge(model)
        config, tensors = model.state()
    save_checkpoint(path, "lm", config, tensors,
                    extra={"layout": layout.to_dict(), **{
                        k: v for k, v in result.items() if v is not None}})
    result["checkpoint"] = path
    return result


@torch.no_grad()
def evaluate_loss(model, rendered, pad_token, batch_size: int = 8) -> float:
    losses = []
    weights = []
    for i in range(0, len(rendered), batch_size):
        chunk = rendered[i:i + batch_size]
        tokens, mask = pad_batch([c[0] for c in chunk], [c[1] for c in chunk],
                                 pad_token)
        losses.append(float(masked_loss(model, tokens, mask)))
        weights.append(int(mask.sum()))
    return float(np.average(losses, weights=weights))


@torch.no_grad()
def evaluate_accuracy(model, rendered, pad_token, batch_size: int = 8) -> float:
    accs = []
    weights = []
    for i in range(0, len(rendered), batch_size):
        chunk = rendered[i:i + batch_size]
        tokens, mask = pad_batch([c[0] for c in chunk], [c[1] for c in chunk],
                                 pad_token)
        accs.append(masked_accuracy(model, tokens, mask))
        weights.append(int(mask.sum()))
    return float(np.average(accs, weights=weights))
