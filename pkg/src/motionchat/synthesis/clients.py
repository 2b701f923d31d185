"""Text-generation / embedding client slots: deterministic offline mocks plus
HTTP clients with retry for optional live services.

The request contract is minimal: prompt in, text out (text-generation) and
text in, vector out (embedding). Pipeline prompts are structured with a
directive first line (CONSOLIDATE / DECOMPOSE / SCRIPT / REFINE) so the mock
can implement each behavior with plain string rules.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from ..errors import ClientError

SPEECH_BANK = [
    "that sounds great", "tell me more", "i like this topic", "let us see",
    "good point", "here is my take", "watch this move", "that was fun",
    "i agree with you", "what a day", "nice to hear that", "try to keep up",
]

MOTION_BANK = [
    "a person waves with the right hand", "a person bows forward politely",
    "a person claps both hands", "a person points ahead with one arm",
    "a person nods the head in agreement", "a person shakes the head in refusal",
    "a person jumps in place", "a person squats down and stands up",
    "a person stretches both arms overhead", "a person kicks with the right leg",
    "a person spins around in place", "a person crouches low to the ground",
]


def _hash(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(),
                          "little")


def _fields(prompt: str) -> dict:
    head = prompt.splitlines()[0]
    out = {}
    for part in head.split():
        if "=" in part:
            k, _, v = part.partition("=")
            out[k] = v
    return out


class MockTextGen:
    """Pure function of (prompt, seed): bitwise deterministic offline stand-in."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(self, prompt: str) -> str:
        directive = prompt.splitlines()[0].split()[0] if prompt.strip() else ""
        body = prompt.splitlines()[1:]
        h = _hash(f"{self.seed}:{prompt}")
        if directive == "CONSOLIDATE":
            captions = [line for line in body if line]
            return "; ".join(captions)
        if directive == "DECOMPOSE":
            caption = "\n".join(body).strip()
            if ";" in caption:
                a, b = caption.split(";", 1)
                for tag in ("A ", "B ", "a ", "b "):
                    a = a.strip()
                    b = b.strip()
                    if a.startswith(tag):
                        a = a[len(tag):]
                    if b.startswith(tag):
                        b = b[len(tag):]
                return f"{a.strip()} || {b.strip()}"
            return f"{caption} || {caption} || AMBIGUOUS"
        if directive == "SCRIPT":
            f = _fields(prompt)
            last_user_motion = next(
                (line[len("LAST_USER_MOTION="):] for line in body
                 if line.startswith("LAST_USER_MOTION=")), "")
            if f.get("TASK") == "imitation" and f.get("ROLE") == "character" \
                    and last_user_motion:
                motion = last_user_motion
            elif "PARTNER_MOTION" in prompt and "PARTNER_MOTION=-" not in prompt \
                    and h % 2 == 0:
                motion = "USE_PARTNER"
            else:
                motion = MOTION_BANK[h % len(MOTION_BANK)]
            speech = SPEECH_BANK[(h // 7) % len(SPEECH_BANK)]
            return f"{speech} || {motion}"
        if directive == "REFINE":
            f = dict(line.split("=", 1) for line in body if "=" in line)
            speech = f.get("SPEECH", "")
            motion = f.get("MOTION", "")
            # first clause only: consolidated captions join many annotations
            clause = motion.split(";")[0].split(",")[0]
            clause = clause.removeprefix("a person ").strip()
            return f"{speech}, as i {clause}" if clause else speech
        if directive == "JUDGE":
            return json.dumps({"context_relevance": 1 + h % 5,
                               "character_consistency": 1 + (h // 11) % 5})
        return SPEECH_BANK[h % len(SPEECH_BANK)]


class MockEmbed:
    """Deterministic random-projection embedding (for live-slot testing only;
    the default retrieval embedder is the hashed TF-IDF in embedding.py)."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def embed(self, text: str) -> np.ndarray:
        rng = np.random.default_rng(_hash(f"{self.seed}:{text}"))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)


@dataclass
class RetryPolicy:
    attempts: int = 3
    base_delay: float = 0.2
    max_delay: float = 5.0

    def delays(self):
        for i in range(self.attempts):
            yield min(self.base_delay * (2 ** i), self.max_delay)


class HttpTextGen:
    """POST {prompt} -> {text} with exponential-backoff retries."""

    def __init__(self, endpoint: str, policy: RetryPolicy | None = None,
                 timeout: float = 30.0, client=None):
        import httpx

        self.endpoint = endpoint
        self.policy = policy or RetryPolicy()
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, prompt: str) -> str:
        last = None
        for delay in self.policy.delays():
            try:
                resp = self._client.post(self.endpoint, json={"prompt": prompt})
                resp.raise_for_status()
                return resp.json()["text"]
            except Exception as e:  # noqa: BLE001 - retried, rethrown below
                last = e
                time.sleep(delay)
        raise ClientError(f"text generation failed after "
                          f"{self.policy.attempts} attempts: {last}")


class HttpEmbed:
    """POST {text} -> {vector} with exponential-backoff retries."""

    def __init__(self, endpoint: str, policy: RetryPolicy | None = None,
                 timeout: float = 30.0, client=None):
        import httpx

        self.endpoint = endpoint
        self.policy = policy or RetryPolicy()
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> np.ndarray:
        last = None
        for delay in self.policy.delays():
            try:
                resp = self._client.post(self.endpoint, json={"text": text})
                resp.raise_for_status()
                return np.asarray(resp.json()["vector"], dtype=np.float64)
            except Exception as e:  # noqa: BLE001
                last = e
                time.sleep(delay)
        raise ClientError(f"embedding failed after "
                          f"{self.policy.attempts} attempts: {last}")
