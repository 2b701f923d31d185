"""Multimodal dialogue synthesis: script -> retrieval -> refinement loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyIndex, RetrievalFailure
from ..motion.clip import MotionTextEntry
from ..template.convo import TASK_TYPES, CharacterProfile
from .embedding import EmbeddingIndex, retrieve_motion
from .topics import Topic

_EXPRESSIONS = ["neutral", "smiling", "curious", "focused", "amused"]


@dataclass
class ScriptRound:
    role: str  # user | character
    speech_text: str
    motion_description: str
    expression_note: str = ""  # carried for completeness, unused by the model
    motion_id: str | None = None

    def __post_init__(self):
        if not self.speech_text and not self.motion_description:
            raise ValueError("round needs speech text or a motion description")


@dataclass
class DialogueItem:
    profile: CharacterProfile
    topic: Topic
    task_type: str
    strategy: str
    rounds: list[ScriptRound] = field(default_factory=list)

    def validate(self):
        if self.task_type not in TASK_TYPES:
            raise ValueError(f"bad task_type {self.task_type!r}")
        for i, r in enumerate(self.rounds):
            expected = "user" if i % 2 == 0 else "character"
            if r.role != expected:
                raise ValueError(f"round {i}: roles must alternate, got {r.role}")
            if r.motion_id is None:
                raise ValueError(f"round {i}: unresolved motion_id")
        return self


def _history_lines(rounds: list[ScriptRound]) -> list[str]:
    return [f"{r.role}: {r.speech_text} / {r.motion_description}"
            for r in rounds]


def _script_prompt(method: str, role: str, profile: CharacterProfile,
                   topic: Topic, task_type: str, round_no: int,
                   rounds: list[ScriptRound], partner_caption: str | None) -> str:
    agent = ""
    if method == "m2":
        agent = f" AGENT={'user_agent' if role == 'user' else 'char_agent'}"
    last_user_motion = next((r.motion_description for r in reversed(rounds)
                             if r.role == "user"), "")
    lines = [f"SCRIPT ROLE={role} TASK={task_type} "
             f"PROFILE={profile.name} ROUND={round_no}{agent}",
             f"TOPIC={topic.text}",
             f"LAST_USER_MOTION={last_user_motion}",
             f"PARTNER_MOTION={partner_caption or '-'}",
             "HISTORY:"]
    lines += _history_lines(rounds)
    return "\n".join(lines)


def _resolve_motion(desc: str, index: EmbeddingIndex, embedder) -> str:
    try:
        top = retrieve_motion(desc, index, k=1, embedder=embedder)
    except EmptyIndex as e:
        raise RetrievalFailure(str(e)) from e
    if not top:
        raise RetrievalFailure(f"nothing retrieved for {desc!r}")
    return top[0][0]


def generate_dialogue(profile: CharacterProfile, topic: Topic, task_type: str,
                      strategy: str, textgen, db_entries: list[MotionTextEntry],
                      index: EmbeddingIndex, embedder, rounds_target: int,
                      seed: int = 0) -> DialogueItem:
    """One multimodal dialogue item.

    Per round: script text from the strategy, motion retrieved from the
    database, speech refined against the retrieved motion's caption (the
    motion choice never changes after retrieval). When the previous round's
    motion belongs to a two-person clip, the partner's motion is offered to
    the strategy for the next round. strategy: m1 (round-by-round), m2
    (dual-agent), m3 (one-shot, non-default), or auto (alternate m1/m2).
    """
    rng = np.random.default_rng(seed)
    method = strategy
    if strategy == "auto":
        method = "m1" if rng.integers(2) == 0 else "m2"
    if method not in ("m1", "m2", "m3"):
        raise ValueError(f"unknown strategy {strategy!r}")
    by_id = {e.motion_id: e for e in db_entries}

    def caption(mid):
        e = by_id[mid]
        return e.consolidated_caption or (e.captions[0] if e.captions else mid)

    item = DialogueItem(profile=profile, topic=topic, task_type=task_type,
                        strategy=method)
    oneshot_lines: list[str] = []
    if method == "m3":
        prompt = "\n".join([
            f"SCRIPT ROLE=all TASK={task_type} PROFILE={profile.name} "
            f"ROUND=all ONESHOT=1 ROUNDS={2 * rounds_target}",
            f"TOPIC={topic.text}", "PARTNER_MOTION=-", "HISTORY:"])
        raw = textgen.complete(prompt)
        oneshot_lines = [ln for ln in raw.splitlines() if ln.strip()]

    partner_offer: str | None = None
    for turn_no in range(2 * rounds_target):
        role = "user" if turn_no % 2 == 0 else "character"
        offer = None if task_type == "imitation" else partner_offer
        if method == "m3" and turn_no < len(oneshot_lines):
            raw = oneshot_lines[turn_no]
        else:
            raw = textgen.complete(_script_prompt(
                method, role, profile, topic, task_type,
                turn_no // 2 + 1, item.rounds, offer))
        parts = [p.strip() for p in raw.split("||")]
        speech_text = parts[0] if parts else ""
        motion_desc = parts[1] if len(parts) > 1 else ""

        if motion_desc == "USE_PARTNER" and offer is not None:
            motion_id = offer_id
            motion_desc = caption(motion_id)
        else:
            if not motion_desc:
                motion_desc = topic.text
            motion_id = _resolve_motion(motion_desc, index, embedder)

        refined = textgen.complete(
            f"REFINE\nSPEECH={speech_text}\nMOTION={caption(motion_id)}").strip()
        item.rounds.append(ScriptRound(
            role=role, speech_text=refined or speech_text,
            motion_description=motion_desc,
            expression_note=_EXPRESSIONS[int(rng.integers(len(_EXPRESSIONS)))],
            motion_id=motion_id))

        entry = by_id[motion_id]
        if entry.partner_id and entry.partner_id in by_id:
            partner_offer = caption(entry.partner_id)
            offer_id = entry.partner_id
        else:
            partner_offer = None
    return item.validate()
