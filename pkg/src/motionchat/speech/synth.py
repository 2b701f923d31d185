"""Toy deterministic text-to-speech: character-level sinusoid units.

Each text character maps to a 20 ms unit of summed sinusoids whose pitch and
formant offsets depend on the voice id, giving recognition/synthesis tasks
real signal structure without audio datasets.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

SAMPLE_RATE = 16_000
UNIT_SECONDS = 0.02
UNIT_SAMPLES = int(SAMPLE_RATE * UNIT_SECONDS)  # 320


@dataclass
class SpeechSignal:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate

    def validate(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.isfinite(self.samples).all():
            raise ValueError("samples must be finite")
        if self.samples.size and float(np.abs(self.samples).max()) > 1.0 + 1e-6:
            raise ValueError("samples must lie in [-1, 1]")
        return self


@dataclass
class VoicePrompt:
    """A 4-6 second sample of a character's voice used for timbre cloning."""

    character_id: str
    signal: SpeechSignal

    def __post_init__(self):
        d = self.signal.duration
        if not 4.0 <= d <= 6.0:
            raise ValueError(f"voice prompt must be 4-6 s, got {d:.2f} s")


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(),
                          "little")


def voice_params(voice_id: str) -> dict:
    """Deterministic per-voice pitch and formant layout."""
    rng = np.random.default_rng(_stable_hash("voice:" + voice_id))
    return {
        "f0": float(rng.uniform(110.0, 300.0)),
        "formant1": float(rng.uniform(500.0, 900.0)),
        "formant2": float(rng.uniform(1200.0, 2400.0)),
        "tilt": float(rng.uniform(0.5, 0.9)),
    }


def _char_unit(char: str, voice: dict) -> np.ndarray:
    code = _stable_hash("char:" + char)
    rng = np.random.default_rng(code)
    # per-character pitch step (semitones) and formant shifts
    f0 = voice["f0"] * 2.0 ** (rng.uniform(-4, 4) / 12.0)
    f1 = voice["formant1"] * (1.0 + rng.uniform(-0.25, 0.25))
    f2 = voice["formant2"] * (1.0 + rng.uniform(-0.25, 0.25))
    t = np.arange(UNIT_SAMPLES) / SAMPLE_RATE
    unit = (0.5 * np.sin(2 * np.pi * f0 * t)
            + 0.3 * voice["tilt"] * np.sin(2 * np.pi * f1 * t)
            + 0.2 * (1 - voice["tilt"]) * np.sin(2 * np.pi * f2 * t))
    # raised-cosine fade at the edges to avoid clicks between units
    fade = max(8, UNIT_SAMPLES // 16)
    env = np.ones(UNIT_SAMPLES)
    ramp = 0.5 * (1 - np.cos(np.pi * np.arange(fade) / fade))
    env[:fade] = ramp
    env[-fade:] = ramp[::-1]
    return (0.6 * unit * env).astype(np.float32)


def text_to_signal(text: str, voice_id: str) -> SpeechSignal:
    """Deterministic toy synthesizer; empty text yields 0.1 s of silence."""
    if not text:
        return SpeechSignal(SAMPLE_RATE, np.zeros(int(0.1 * SAMPLE_RATE),
                                                  dtype=np.float32))
    voice = voice_params(voice_id)
    units = [_char_unit(c, voice) for c in text]
    return SpeechSignal(SAMPLE_RATE, np.concatenate(units))


def voice_prompt(character_id: str, voice_id: str, seconds: float = 5.0) -> VoicePrompt:
    """Fabricate a 4-6 s prompt by cycling a pangram in the character's voice."""
    base = "the quick brown fox jumps over the lazy dog 0123456789 "
    n_chars = int(round(seconds / UNIT_SECONDS))
    text = (base * (n_chars // len(base) + 1))[:n_chars]
    return VoicePrompt(character_id=character_id,
                       signal=text_to_signal(text, voice_id))
