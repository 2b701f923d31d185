"""Unified token space: text bytes, motion/speech ranges, special delimiters."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import TokenOutOfRange

SPECIAL_NAMES = ["SYS_START", "SYS_END", "ROLE_USER", "ROLE_CHAR", "SOM", "EOM",
                 "SOS", "EOS", "SEP", "EOT", "PAD"]


@dataclass(frozen=True)
class VocabLayout:
    """Contiguous, disjoint index ranges; text bytes first, specials last."""

    text_size: int = 256
    body_size: int = 512
    hand_size: int = 512
    transform_size: int = 128
    speech_size: int = 256

    @property
    def text_base(self) -> int:
        return 0

    @property
    def body_base(self) -> int:
        return self.text_size

    @property
    def hand_base(self) -> int:
        return self.body_base + self.body_size

    @property
    def transform_base(self) -> int:
        return self.hand_base + self.hand_size

    @property
    def speech_base(self) -> int:
        return self.transform_base + self.transform_size

    @property
    def special_base(self) -> int:
        return self.speech_base + self.speech_size

    @property
    def vocab_size(self) -> int:
        return self.special_base + len(SPECIAL_NAMES)

    def special(self, name: str) -> int:
        return self.special_base + SPECIAL_NAMES.index(name)

    def special_name(self, token: int) -> str:
        return SPECIAL_NAMES[token - self.special_base]

    def classify(self, token: int) -> str:
        """Range name of a token: text/body/hand/transform/speech or the
        special's own name."""
        if 0 <= token < self.text_size:
            return "text"
        if self.body_base <= token < self.hand_base:
            return "body"
        if self.hand_base <= token < self.transform_base:
            return "hand"
        if self.transform_base <= token < self.speech_base:
            return "transform"
        if self.speech_base <= token < self.special_base:
            return "speech"
        if self.special_base <= token < self.vocab_size:
            return self.special_name(token)
        raise TokenOutOfRange(f"token {token} outside vocabulary of {self.vocab_size}")

    # raw-id <-> unified-id helpers per modality
    def body_token(self, raw: int) -> int:
        self._check(raw, self.body_size, "body")
        return self.body_base + raw

    def hand_token(self, raw: int) -> int:
        self._check(raw, self.hand_size, "hand")
        return self.hand_base + raw

    def transform_token(self, raw: int) -> int:
        self._check(raw, self.transform_size, "transform")
        return self.transform_base + raw

    def speech_token(self, raw: int) -> int:
        self._check(raw, self.speech_size, "speech")
        return self.speech_base + raw

    def _check(self, raw: int, size: int, kind: str):
        if not 0 <= raw < size:
            raise TokenOutOfRange(f"{kind} token {raw} outside [0, {size})")

    def encode_text(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode_text(self, tokens: list[int]) -> str:
        return bytes(tokens).decode("utf-8", errors="replace")

    def to_dict(self) -> dict:
        return {"text_size": self.text_size, "body_size": self.body_size,
                "hand_size": self.hand_size, "transform_size": self.transform_size,
                "speech_size": self.speech_size}

    @staticmethod
    def from_dict(d: dict) -> "VocabLayout":
        return VocabLayout(**d)
