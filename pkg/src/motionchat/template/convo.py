"""Conversation domain types."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..tokenizer.tokens import MotionTokens

TASK_TYPES = ("common", "motion_understanding", "instruction_following", "imitation")


@dataclass
class CharacterProfile:
    name: str
    description: str
    voice_id: str
    motion_tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.name:
            raise ValueError("profile name must be nonempty")


@dataclass
class Turn:
    """One side of a round: motion tokens plus speech tokens, optional transcript.

    `text` is carried for evaluation only and is never serialized into the
    model sequence.
    """

    role: str  # user | character
    motion: MotionTokens = field(default_factory=MotionTokens.none)
    speech: list[int] = field(default_factory=list)
    text: str | None = None

    def __post_init__(self):
        if self.role not in ("user", "character"):
            raise ValueError(f"bad role {self.role!r}")

    def validate(self):
        if self.motion.empty and not self.speech:
            raise ValueError("turn must carry motion or speech")
        return self


@dataclass
class Conversation:
    profile: CharacterProfile
    turns: list[Turn] = field(default_factory=list)
    topic: str = ""
    task_type: str = "common"

    def validate(self):
        if self.task_type not in TASK_TYPES:
            raise ValueError(f"bad task_type {self.task_type!r}")
        for i, turn in enumerate(self.turns):
            expected = "user" if i % 2 == 0 else "character"
            if turn.role != expected:
                raise ValueError(
                    f"turn {i} role {turn.role!r}: roles must alternate starting "
                    f"with user")
            turn.validate()
        return self

    @property
    def rounds(self) -> int:
        return (len(self.turns) + 1) // 2

    def system_text(self) -> str:
        """Canonical system-prompt text: profile plus topic/task metadata."""
        return json.dumps([self.profile.name, self.profile.voice_id,
                           self.profile.description, self.profile.motion_tags,
                           self.topic, self.task_type],
                          ensure_ascii=False, separators=(",", ":"))

    @staticmethod
    def from_system_text(text: str) -> "Conversation":
        name, voice_id, description, tags, topic, task_type = json.loads(text)
        return Conversation(
            profile=CharacterProfile(name=name, description=description,
                                     voice_id=voice_id, motion_tags=list(tags)),
            turns=[], topic=topic, task_type=task_type)
