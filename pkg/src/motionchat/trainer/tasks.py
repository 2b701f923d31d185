"""Stage-2 task datasets and the motion/speech family mixer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..motion.clip import MotionTextEntry
from ..speech.codec import SpeechCodec
from ..speech.synth import text_to_signal
from ..template.codec import MOTION_FAMILY, SPEECH_FAMILY, TASKS
from ..tokenizer.tokens import MotionTokens
from ..tokenizer.vqvae import MotionTokenizerSet


@dataclass
class TaskItem:
    task_id: str
    inputs: list
    output: object


def encode_entries(entries: list[MotionTextEntry], tokenizers: MotionTokenizerSet,
                   rels=None) -> dict[str, MotionTokens]:
    """Motion tokens per db entry; rels maps motion_id -> RelativeTransform."""
    from ..motion.clip import RelativeTransform

    out = {}
    for e in entries:
        rel = (rels or {}).get(e.motion_id) or RelativeTransform.identity()
        out[e.motion_id] = tokenizers.encode_motion(e.clip, rel)
    return out


def caption_of(entry: MotionTextEntry) -> str:
    return entry.consolidated_caption or (entry.captions[0] if entry.captions
                                          else entry.motion_id)


def build_motion_task_items(entries: list[MotionTextEntry],
                            tokens_by_id: dict[str, MotionTokens]
                            ) -> dict[str, list[TaskItem]]:
    items = {"t2m": [], "m2t": [], "interx": []}
    by_id = {e.motion_id: e for e in entries}
    for e in entries:
        toks = tokens_by_id[e.motion_id]
        cap = caption_of(e)
        items["t2m"].append(TaskItem("t2m", [cap], toks))
        items["m2t"].append(TaskItem("m2t", [toks], cap))
        if e.partner_id and e.partner_id in by_id:
            partner = by_id[e.partner_id]
            items["interx"].append(TaskItem(
                "interx", [cap, toks], tokens_by_id[partner.motion_id]))
    return items


def build_speech_task_items(sentences: list[str], s2s_pairs: list[tuple[str, str]],
                            voices: list[str], codec: SpeechCodec
                            ) -> dict[str, list[TaskItem]]:
    items = {"tts": [], "asr": [], "s2s": []}
    for i, text in enumerate(sentences):
        voice = voices[i % len(voices)]
        speech = codec.encode(text_to_signal(text, voice)).first_layer
        items["tts"].append(TaskItem("tts", [text], speech))
        items["asr"].append(TaskItem("asr", [speech], text))
    for i, (q, a) in enumerate(s2s_pairs):
        voice_q = voices[i % len(voices)]
        voice_a = voices[(i + 1) % len(voices)]
        sq = codec.encode(text_to_signal(q, voice_q)).first_layer
        sa = codec.encode(text_to_signal(a, voice_a)).first_layer
        items["s2s"].append(TaskItem("s2s", [sq], sa))
    return items


class FamilyMixer:
    """Per-batch sampler: motion family with probability `motion_ratio`
    (default 0.4, i.e. motion:speech = 4:6), uniform over present tasks
    within the family, uniform over items within the task."""

    def __init__(self, task_items: dict[str, list[TaskItem]], seed: int,
                 motion_ratio: float = 0.4,
                 disabled_tasks: list[str] | None = None):
        disabled = set(disabled_tasks or [])
        unknown = disabled - set(TASKS)
        if unknown:
            raise ConfigError(f"unknown disabled tasks: {sorted(unknown)}")
        self.by_task = {t: v for t, v in task_items.items()
                        if v and t not in disabled}
        self.motion_tasks = [t for t in MOTION_FAMILY if t in self.by_task]
        self.speech_tasks = [t for t in SPEECH_FAMILY if t in self.by_task]
        missing = [t for t in (*MOTION_FAMILY, *SPEECH_FAMILY)
                   if t not in self.by_task and t not in disabled]
        if missing:
            raise ConfigError(
                f"tasks {missing} have no items and are not explicitly disabled")
        if not self.motion_tasks and not self.speech_tasks:
            raise ConfigError("no tasks to sample")
        self.motion_ratio = motion_ratio
        self.rng = np.random.default_rng(seed)

    def draw(self, batch_size: int) -> tuple[str, list[TaskItem]]:
        """One batch: (family, items)."""
        if not self.motion_tasks:
            family = "speech"
        elif not self.speech_tasks:
            family = "motion"
        else:
            family = "motion" if self.rng.random() < self.motion_ratio else "speech"
        tasks = self.motion_tasks if family == "motion" else self.speech_tasks
        task = tasks[int(self.rng.integers(len(tasks)))]
        pool = self.by_task[task]
        picks = self.rng.integers(0, len(pool), batch_size)
        return family, [pool[int(i)] for i in picks]
