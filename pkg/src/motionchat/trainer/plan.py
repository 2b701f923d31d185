"""Stage plans: human-editable JSON config for the three-stage pipeline."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..lm.model import TransformerConfig
from ..template.vocab import VocabLayout
from ..tokenizer.vqvae import VqvaeConfig


@dataclass
class Stage1Plan:
    steps: int = 300
    batch_size: int = 32
    body: dict = field(default_factory=dict)
    hand: dict = field(default_factory=dict)
    transform: dict = field(default_factory=dict)


@dataclass
class Stage2Plan:
    steps: int = 5000
    batch_size: int = 32
    lr: float = 3e-4
    motion_ratio: float = 0.4  # motion:speech families sampled 4:6
    disabled_tasks: list[str] = field(default_factory=list)
    eval_every: int = 250

    def __post_init__(self):
        if not 0.0 <= self.motion_ratio <= 1.0:
            raise ConfigError("motion_ratio must lie in [0, 1]")


@dataclass
class Stage3Plan:
    steps: int = 2000
    batch_size: int = 8
    lr: float = 1e-4
    mode: str = "full"  # full | lora
    split: tuple[int, int] = (9, 1)
    eval_every: int = 100
    from_pretrain: bool = True
    lora_rank: int = 8
    lora_alpha: float = 16.0

    def __post_init__(self):
        if self.mode not in ("full", "lora"):
            raise ConfigError(f"stage3 mode {self.mode!r} not in full/lora")
        if len(self.split) != 2 or min(self.split) <= 0:
            raise ConfigError("split must be two positive numbers")


@dataclass
class StagePlan:
    seed: int = 0
    layout: VocabLayout = field(default_factory=VocabLayout)
    model: dict = field(default_factory=dict)
    stage1: Stage1Plan = field(default_factory=Stage1Plan)
    stage2: Stage2Plan = field(default_factory=Stage2Plan)
    stage3: Stage3Plan = field(default_factory=Stage3Plan)

    def transformer_config(self) -> TransformerConfig:
        base = dict(layers=4, heads=4, model_dim=128, ff_dim=512,
                    max_context=1024, dropout=0.0, seed=self.seed)
        base.update(self.model)
        base["vocab_size"] = self.layout.vocab_size
        return TransformerConfig(**base)

    def vqvae_config(self, part: str) -> VqvaeConfig:
        sizes = {"body": self.layout.body_size, "hand": self.layout.hand_size,
                 "transform": self.layout.transform_size}
        overrides = getattr(self.stage1, part)
        cfg = dict(part=part, codebook_size=sizes[part])
        if part == "transform":
            cfg.update(in_dim=9, width=64, code_dim=32)
        cfg.update(overrides)
        return VqvaeConfig(**cfg)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["layout"] = self.layout.to_dict()
        d["stage3"]["split"] = list(self.stage3.split)
        return d

    @staticmethod
    def from_dict(d: dict) -> "StagePlan":
        try:
            plan = StagePlan(
                seed=d.get("seed", 0),
                layout=VocabLayout.from_dict(d.get("layout", {})),
                model=d.get("model", {}),
                stage1=Stage1Plan(**d.get("stage1", {})),
                stage2=Stage2Plan(**d.get("stage2", {})),
                stage3=Stage3Plan(**{**d.get("stage3", {}),
                                     "split": tuple(d.get("stage3", {}).get(
                                         "split", (9, 1)))}),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad plan: {e}") from e
        return plan


def load_plan(path) -> StagePlan:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"plan file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            return StagePlan.from_dict(json.load(f))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e


def save_plan(plan: StagePlan, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(plan.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
