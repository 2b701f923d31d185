"""Discrete motion token container."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class MotionTokens:
    """Non-interleaved body/hand token streams plus one whole-clip transform token.

    body and hand always have equal length; transform is None only for the
    fully-empty motion (no tokens at all).
    """

    body: list[int] = field(default_factory=list)
    hand: list[int] = field(default_factory=list)
    transform: int | None = None

    def __post_init__(self):
        if len(self.body) != len(self.hand):
            raise ValueError(
                f"body ({len(self.body)}) and hand ({len(self.hand)}) streams differ")

    @property
    def length(self) -> int:
        return len(self.body)

    @property
    def empty(self) -> bool:
        return not self.body and self.transform is None

    @staticmethod
    def none() -> "MotionTokens":
        return MotionTokens(body=[], hand=[], transform=None)
