"""Interaction-template and pretraining-task codecs.

Sequence layout:
  [SYS_START] profile-bytes [SYS_END]
  per turn: [ROLE] [SOM] body [SEP] hand [SEP] transform [EOM]
            [SOS] speech [EOS] [EOT]
Body and hand are separate contiguous runs (non-interleaved); the transform
slot holds zero or one token (zero only for a fully-empty motion).
"""

from __future__ import annotations

from ..errors import ParseError, UnknownTask
from ..tokenizer.tokens import MotionTokens
from .convo import Conversation, Turn
from .vocab import VocabLayout

# task id -> (input payload kinds, output payload kind)
TASKS = {
    "t2m": (("text",), "motion"),
    "m2t": (("motion",), "text"),
    "interx": (("text", "motion"), "motion"),
    "tts": (("text",), "speech"),
    "asr": (("speech",), "text"),
    "s2s": (("speech",), "speech"),
    "chat": (("text",), "text"),
}
MOTION_FAMILY = ("t2m", "m2t", "interx")
SPEECH_FAMILY = ("tts", "asr", "s2s")


def motion_block(motion: MotionTokens, layout: VocabLayout) -> list[int]:
    out = [layout.special("SOM")]
    out += [layout.body_token(b) for b in motion.body]
    out.append(layout.special("SEP"))
    out += [layout.hand_token(h) for h in motion.hand]
    out.append(layout.special("SEP"))
    if motion.transform is not None:
        out.append(layout.transform_token(motion.transform))
    out.append(layout.special("EOM"))
    return out


def speech_block(speech: list[int], layout: VocabLayout) -> list[int]:
    return ([layout.special("SOS")] + [layout.speech_token(s) for s in speech]
            + [layout.special("EOS")])


def render_turn(turn: Turn, layout: VocabLayout) -> list[int]:
    role = "ROLE_USER" if turn.role == "user" else "ROLE_CHAR"
    return ([layout.special(role)] + motion_block(turn.motion, layout)
            + speech_block(turn.speech, layout) + [layout.special("EOT")])


def render_with_spans(conv: Conversation, layout: VocabLayout):
    """Tokens plus per-turn (role, start, end_inclusive) spans."""
    conv.validate()
    tokens = [layout.special("SYS_START")]
    tokens += layout.encode_text(conv.system_text())
    tokens.append(layout.special("SYS_END"))
    spans = []
    for turn in conv.turns:
        start = len(tokens)
        tokens += render_turn(turn, layout)
        spans.append((turn.role, start, len(tokens) - 1))
    return tokens, spans


def render_interaction(conv: Conversation, layout: VocabLayout) -> list[int]:
    return render_with_spans(conv, layout)[0]


class _Reader:
    def __init__(self, tokens: list[int], layout: VocabLayout):
        self.tokens = list(tokens)
        self.layout = layout
        self.pos = 0

    def eof(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek_class(self) -> str:
        return self.layout.classify(self.tokens[self.pos])

    def fail(self, expected: str, incomplete: bool = False):
        found = None if self.eof() else self.layout.classify(self.tokens[self.pos])
        raise ParseError(
            f"at position {self.pos}: expected {expected}, found "
            f"{'end-of-sequence' if found is None else found}",
            position=self.pos, expected=expected, found=found,
            incomplete=incomplete or self.eof())

    def expect_special(self, name: str):
        if self.eof():
            self.fail(name, incomplete=True)
        if self.peek_class() != name:
            self.fail(name)
        self.pos += 1

    def take_range(self, range_name: str, terminators: tuple[str, ...]) -> list[int]:
        """Consume tokens of one range until a terminator special (not consumed)."""
        out = []
        while True:
            if self.eof():
                self.fail(f"{range_name}-range or {'/'.join(terminators)}",
                          incomplete=True)
            cls = self.peek_class()
            if cls in terminators:
                return out
            if cls != range_name:
                self.fail(f"{range_name}-range or {'/'.join(terminators)}")
            out.append(self.tokens[self.pos])
            self.pos += 1


def _parse_motion_block(r: _Reader) -> MotionTokens:
    layout = r.layout
    r.expect_special("SOM")
    body = [t - layout.body_base for t in r.take_range("body", ("SEP",))]
    r.expect_special("SEP")
    hand = [t - layout.hand_base for t in r.take_range("hand", ("SEP",))]
    r.expect_special("SEP")
    transform = None
    if r.eof():
        r.fail("transform or EOM", incomplete=True)
    if r.peek_class() == "transform":
        transform = r.tokens[r.pos] - layout.transform_base
        r.pos += 1
    if len(body) != len(hand):
        r.fail(f"hand stream of length {len(body)} to match body stream "
               f"(got {len(hand)})")
    r.expect_special("EOM")
    return MotionTokens(body=body, hand=hand, transform=transform)


def _parse_speech_block(r: _Reader) -> list[int]:
    r.expect_special("SOS")
    speech = [t - r.layout.speech_base for t in r.take_range("speech", ("EOS",))]
    r.expect_special("EOS")
    return speech


def parse_interaction(tokens: list[int], layout: VocabLayout) -> Conversation:
    """Total inverse of render_interaction; raises located ParseError on any
    malformed input, with incomplete=True when the sequence is truncated."""
    r = _Reader(tokens, layout)
    r.expect_special("SYS_START")
    sys_tokens = r.take_range("text", ("SYS_END",))
    r.expect_special("SYS_END")
    try:
        conv = Conversation.from_system_text(layout.decode_text(sys_tokens))
    except Exception as e:
        raise ParseError(f"bad system block: {e}", position=1,
                         expected="profile JSON") from e
    want_role = "ROLE_USER"
    while not r.eof():
        turn_start = r.pos
        r.expect_special(want_role)
        motion = _parse_motion_block(r)
        speech = _parse_speech_block(r)
        r.expect_special("EOT")
        turn = Turn(role="user" if want_role == "ROLE_USER" else "character",
                    motion=motion, speech=speech)
        try:
            turn.validate()
        except ValueError as e:
            raise ParseError(f"at position {turn_start}: invalid turn: {e}",
                             position=turn_start, expected="nonempty turn") from e
        conv.turns.append(turn)
        want_role = "ROLE_CHAR" if want_role == "ROLE_USER" else "ROLE_USER"
    return conv


def parse_character_block(tokens: list[int], layout: VocabLayout) -> Turn:
    """Parse a generated character continuation: SOM ... EOT (no role marker)."""
    r = _Reader(tokens, layout)
    motion = _parse_motion_block(r)
    speech = _parse_speech_block(r)
    r.expect_special("EOT")
    if not r.eof():
        r.fail("end-of-sequence")
    return Turn(role="character", motion=motion, speech=speech)


def supervision_mask(conv: Conversation, layout: VocabLayout) -> list[bool]:
    """mask[p] is True iff predicting token p+1 is supervised: positions whose
    next token lies in a character turn's motion/speech blocks (their
    delimiters and the closing EOT included; the role marker is context)."""
    tokens, spans = render_with_spans(conv, layout)
    mask = [False] * len(tokens)
    for role, start, end in spans:
        if role != "character":
            continue
        # supervised targets are start+1 (SOM) .. end (EOT); shift left by one
        for p in range(start, end):
            mask[p] = True
    return mask


def _render_payload(kind: str, value, layout: VocabLayout) -> list[int]:
    if kind == "text":
        return layout.encode_text(value)
    if kind == "motion":
        return motion_block(value, layout)
    if kind == "speech":
        return speech_block(value, layout)
    raise UnknownTask(f"unknown payload kind {kind!r}")


def render_pretrain_task(task_id: str, inputs, output, layout: VocabLayout):
    """`User: <task tag><input payloads>  Character: <output payload>` with the
    supervision mask true exactly over the output block (plus the closing EOT
    when the output is raw text, which has no block terminator of its own).

    inputs is a payload or list of payloads matching the task's input kinds;
    payload values are str, MotionTokens, or speech index lists.
    Returns (tokens, mask).
    """
    if task_id not in TASKS:
        raise UnknownTask(f"unknown task id {task_id!r}")
    in_kinds, out_kind = TASKS[task_id]
    if not isinstance(inputs, (list, tuple)):
        inputs = [inputs]
    if len(inputs) != len(in_kinds):
        raise UnknownTask(f"task {task_id!r} expects {len(in_kinds)} inputs")
    tokens = [layout.special("ROLE_USER")]
    tokens += layout.encode_text(f"[{task_id}]")
    for kind, value in zip(in_kinds, inputs):
        tokens += _render_payload(kind, value, layout)
    tokens.append(layout.special("ROLE_CHAR"))
    out_start = len(tokens)
    tokens += _render_payload(out_kind, output, layout)
    out_end = len(tokens) - 1
    tokens.append(layout.special("EOT"))
    if out_kind == "text":
        out_end += 1  # supervise the EOT terminator for unterminated text
    mask = [False] * len(tokens)
    for p in range(out_start - 1, out_end):
        mask[p] = True
    return tokens, mask


def parse_pretrain_task(tokens: list[int], layout: VocabLayout):
    """Inverse of render_pretrain_task: (task_id, inputs, output)."""
    r = _Reader(tokens, layout)
    r.expect_special("ROLE_USER")
    tag = layout.decode_text(r.take_range(
        "text", ("SOM", "SOS", "ROLE_CHAR")))
    if not (tag.startswith("[") and "]" in tag):
        raise ParseError(f"bad task tag {tag!r}", position=1, expected="[task]")
    tag_end = tag.index("]")
    task_id, first_text = tag[1:tag_end], tag[tag_end + 1:]
    if task_id not in TASKS:
        raise UnknownTask(f"unknown task id {task_id!r}")
    in_kinds, out_kind = TASKS[task_id]
    inputs = []
    for i, kind in enumerate(in_kinds):
        if kind == "text":
            if i == 0:
                inputs.append(first_text)
            else:
                inputs.append(layout.decode_text(
                    r.take_range("text", ("SOM", "SOS", "ROLE_CHAR"))))
        elif kind == "motion":
            inputs.append(_parse_motion_block(r))
        else:
            inputs.append(_parse_speech_block(r))
    r.expect_special("ROLE_CHAR")
    if out_kind == "text":
        output = layout.decode_text(r.take_range("text", ("EOT",)))
    elif out_kind == "motion":
        output = _parse_motion_block(r)
    else:
        output = _parse_speech_block(r)
    r.expect_special("EOT")
    return task_id, inputs, output
