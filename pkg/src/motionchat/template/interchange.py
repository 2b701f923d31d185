"""Conversation interchange file format.

Line-oriented text, one conversation per record, version field up front.
This is the wire/history/export schema shared with external consumers
(including the web client), so the rendering is canonical: a given
conversation always serializes to the same bytes, and checksums are
sha256 over the UTF-8 text.
"""

from __future__ import annotations

import hashlib
import json

from ..errors import ParseError
from ..tokenizer.tokens import MotionTokens
from .convo import CharacterProfile, Conversation, Turn

MAGIC = "CONVO v1"


def _ints(values: list[int]) -> str:
    return ",".join(str(v) for v in values) if values else "-"


def _parse_ints(text: str) -> list[int]:
    return [] if text == "-" else [int(v) for v in text.split(",")]


def render_conversation_record(conv: Conversation) -> str:
    lines = [MAGIC]
    lines.append("profile " + json.dumps(
        [conv.profile.name, conv.profile.voice_id, conv.profile.description,
         conv.profile.motion_tags], ensure_ascii=False, separators=(",", ":")))
    lines.append("topic " + json.dumps(conv.topic, ensure_ascii=False))
    lines.append("task " + conv.task_type)
    for turn in conv.turns:
        lines.append(f"turn {turn.role}")
        t = turn.motion.transform
        lines.append(f"motion body={_ints(turn.motion.body)} "
                     f"hand={_ints(turn.motion.hand)} "
                     f"transform={'-' if t is None else t}")
        lines.append("speech " + _ints(turn.speech))
        if turn.text is not None:
            lines.append("text " + json.dumps(turn.text, ensure_ascii=False))
        lines.append("endturn")
    lines.append("endconvo")
    return "\n".join(lines) + "\n"


def save_conversations(convs: list[Conversation], path):
    with open(path, "w", encoding="utf-8") as f:
        for conv in convs:
            f.write(render_conversation_record(conv))


def parse_conversations(text: str) -> list[Conversation]:
    convs = []
    cur = None
    turn = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue

        def fail(msg):
            raise ParseError(f"line {lineno}: {msg}", line=lineno)

        key, _, rest = line.partition(" ")
        if line == MAGIC:
            if cur is not None:
                fail("record started before previous `endconvo`")
            cur = Conversation(profile=CharacterProfile(
                name="?", description="", voice_id=""), turns=[])
            continue
        if cur is None:
            fail(f"unexpected line outside record: {line!r}")
        try:
            if key == "profile":
                name, voice_id, description, tags = json.loads(rest)
                cur.profile = CharacterProfile(name=name, description=description,
                                               voice_id=voice_id,
                                               motion_tags=list(tags))
            elif key == "topic":
                cur.topic = json.loads(rest)
            elif key == "task":
                cur.task_type = rest.strip()
            elif key == "turn":
                if turn is not None:
                    fail("turn started before previous `endturn`")
                turn = Turn(role=rest.strip())
            elif key == "motion":
                fields = dict(kv.split("=", 1) for kv in rest.split())
                t = fields["transform"]
                turn.motion = MotionTokens(
                    body=_parse_ints(fields["body"]),
                    hand=_parse_ints(fields["hand"]),
                    transform=None if t == "-" else int(t))
            elif key == "speech":
                turn.speech = _parse_ints(rest)
            elif key == "text":
                turn.text = json.loads(rest)
            elif key == "endturn":
                cur.turns.append(turn)
                turn = None
            elif key == "endconvo":
                convs.append(cur.validate())
                cur = None
            else:
                fail(f"unknown field {key!r}")
        except ParseError:
            raise
        except Exception as e:
            fail(str(e))
    if cur is not None:
        raise ParseError("unterminated conversation record", line=0)
    return convs


def load_conversations(path) -> list[Conversation]:
    with open(path, encoding="utf-8") as f:
        return parse_conversations(f.read())


def conversation_checksum(conv: Conversation) -> str:
    return hashlib.sha256(render_conversation_record(conv).encode()).hexdigest()
