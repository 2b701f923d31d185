"""Session-scoped interaction service: routing, streaming, history.

Framework-free core; the HTTP layer in app.py adapts it to FastAPI + SSE.
"""

from __future__ import annotations

import hashlib
import itertools
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import (BadRequest, ParseError, SessionBusy, SessionNotFound,
                      UnknownMethod, UnknownProfile)
from ..lm.model import CausalTransformer
from ..lm.sampler import SamplerConfig, generate
from ..metrics.latency import LatencyRecord
from ..motion.clip import MotionClip, MotionTextEntry, RelativeTransform
from ..motion.skeleton import SkeletonSpec, forward_kinematics
from ..speech.codec import SpeechCodec
from ..speech.synth import VoicePrompt, text_to_signal
from ..speech.wav import save_wav
from ..template.codec import (motion_block, parse_character_block,
                              render_pretrain_task, render_turn,
                              render_with_spans, speech_block)
from ..template.convo import CharacterProfile, Conversation, Turn
from ..template.vocab import VocabLayout
from ..tokenizer.tokens import MotionTokens
from ..tokenizer.vqvae import MotionTokenizerSet

METHODS = ("end_to_end", "modular", "speech_only")


@dataclass
class ServerAssets:
    tokenizers: MotionTokenizerSet
    codec: SpeechCodec
    model: CausalTransformer
    layout: VocabLayout
    skeleton: SkeletonSpec
    profiles: dict[str, CharacterProfile]
    prompts: dict[str, VoicePrompt]
    entries: list[MotionTextEntry] = field(default_factory=list)
    rels: dict[str, RelativeTransform] = field(default_factory=dict)
    embedder: object = None
    index: object = None
    idle_ids: list[str] = field(default_factory=list)

    def entry(self, motion_id: str) -> MotionTextEntry:
        for e in self.entries:
            if e.motion_id == motion_id:
                return e
        raise BadRequest(f"unknown motion_id {motion_id!r}")


@dataclass
class Session:
    session_id: str
    profile: CharacterProfile
    method: str
    sampler: SamplerConfig
    conversation: Conversation
    created: float = field(default_factory=time.time)
    turn_count: int = 0
    evicted: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    system_tokens: list[int] = field(default_factory=list)  # cached prefix


class InteractionService:
    def __init__(self, assets: ServerAssets, media_dir,
                 default_sampler: SamplerConfig | None = None):
        self.assets = assets
        self.media_dir = Path(media_dir)
        self.media_dir.mkdir(parents=True, exist_ok=True)
        self.default_sampler = default_sampler or SamplerConfig(
            temperature=0.8, top_k=40, max_new_tokens=256)
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._latency: dict[str, LatencyRecord] = {
            m: LatencyRecord(method=m) for m in METHODS}
        self._idle_cycle = itertools.cycle(assets.idle_ids or ["-"])
        stops = [assets.layout.special("EOT")]
        self.default_sampler = replace(self.default_sampler,
                                       stop_tokens=frozenset(stops))

    # -- session management ------------------------------------------------

    def create_session(self, profile_id: str, method: str,
                       sampler: dict | None = None) -> str:
        if profile_id not in self.assets.profiles:
            raise UnknownProfile(f"unknown profile {profile_id!r}")
        if method not in METHODS:
            raise UnknownMethod(f"unknown method {method!r}; expected one of "
                                f"{METHODS}")
        profile = self.assets.profiles[profile_id]
        cfg = self.default_sampler
        if sampler:
            allowed = {k: v for k, v in sampler.items()
                       if k in ("temperature", "top_k", "max_new_tokens", "seed")}
            cfg = replace(cfg, **allowed)
        session_id = uuid.uuid4().hex[:16]
        conv = Conversation(profile=profile, turns=[], topic="live session",
                            task_type="common")
        session = Session(session_id=session_id, profile=profile, method=method,
                          sampler=cfg, conversation=conv)
        session.system_tokens = render_with_spans(conv, self.assets.layout)[0]
        with self._registry_lock:
            self._sessions[session_id] = session
        return session_id

    def _get(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(f"no session {session_id!r}")
        return session

    def get_history(self, session_id: str) -> Conversation:
        return self._get(session_id).conversation

    def close_session(self, session_id: str):
        with self._registry_lock:
            self._sessions.pop(session_id, None)  # idempotent

    def list_profiles(self) -> list[dict]:
        return [{"profile_id": pid, "name": p.name, "description": p.description,
                 "voice_id": p.voice_id, "motion_tags": p.motion_tags}
                for pid, p in self.assets.profiles.items()]

    def metrics(self) -> dict:
        return {m: (rec.summary() if rec.first_token_s else
                    {"method": m, "turns": 0})
                for m, rec in self._latency.items()}

    # -- turn handling -------------------------------------------------------

    def parse_request(self, session: Session, request: dict) -> Turn:
        if not isinstance(request, dict):
            raise BadRequest("request body must be a JSON object")
        motion = MotionTokens.none()
        text = None
        speech: list[int] = []
        m = request.get("motion")
        if m:
            if "tokens" in m:
                t = m["tokens"]
                try:
                    motion = MotionTokens(body=list(t["body"]),
                                          hand=list(t["hand"]),
                                          transform=t.get("transform"))
                except (KeyError, TypeError, ValueError) as e:
                    raise BadRequest(f"bad motion tokens: {e}") from e
            elif "motion_id" in m:
                entry = self.assets.entry(m["motion_id"])
                rel = self.assets.rels.get(entry.motion_id,
                                           RelativeTransform.identity())
                motion = self.assets.tokenizers.encode_motion(entry.clip, rel)
            elif "keyframes" in m:
                motion = self._compose_keyframes(m["keyframes"])
            else:
                raise BadRequest(
                    "motion must carry `tokens`, `motion_id`, or `keyframes`")
        s = request.get("speech")
        if s:
            if "tokens" in s:
                try:
                    speech = [int(x) for x in s["tokens"]]
                except (TypeError, ValueError) as e:
                    raise BadRequest(f"bad speech tokens: {e}") from e
            elif "text" in s:
                text = str(s["text"])
                voice = s.get("voice_id", "user_default")
                signal = text_to_signal(text, voice)
                speech = self.assets.codec.encode(signal).first_layer
            else:
                raise BadRequest("speech must carry `tokens` or `text`")
        if motion.empty and not speech:
            raise BadRequest("turn needs motion or speech")
        try:
            return Turn(role="user", motion=motion, speech=speech,
                        text=text).validate()
        except ValueError as e:
            raise BadRequest(str(e)) from e

    def _compose_keyframes(self, keyframes) -> MotionTokens:
        """Pose-sequence recorder support: concatenate library clip segments
        into one clip and encode it."""
        if not isinstance(keyframes, list) or not keyframes:
            raise BadRequest("keyframes must be a nonempty list")
        ds = self.assets.tokenizers.downsample
        body_parts, hand_parts, transl_parts = [], [], []
        fps = None
        for kf in keyframes:
            try:
                entry = self.assets.entry(kf["motion_id"])
                frames = int(kf.get("frames", ds))
            except (KeyError, TypeError) as e:
                raise BadRequest(f"bad keyframe: {e}") from e
            if frames < 1:
                raise BadRequest("keyframe frames must be positive")
            frames = min(max(frames, ds), entry.clip.frames)
            frames = (frames // ds) * ds
            body_parts.append(entry.clip.body_rot[:frames])
            hand_parts.append(entry.clip.hand_rot[:frames])
            transl_parts.append(entry.clip.root_transl[:frames])
            fps = entry.clip.fps
        clip = MotionClip(fps=fps,
                          body_rot=np.concatenate(body_parts, axis=0),
                          hand_rot=np.concatenate(hand_parts, axis=0),
                          root_transl=np.concatenate(transl_parts, axis=0))
        return self.assets.tokenizers.encode_motion(
            clip, RelativeTransform.identity())

    def post_turn(self, session_id: str, request: dict):
        """Validates and locks eagerly; returns the frame generator."""
        session = self._get(session_id)
        user_turn = self.parse_request(session, request)
        if not session.lock.acquire(blocking=False):
            raise SessionBusy(f"generation in flight for {session_id}")
        try:
            return self._frames(session, user_turn)
        except BaseException:
            session.lock.release()
            raise

    # frame generator; owns the session lock until exhausted/closed
    def _frames(self, session: Session, user_turn: Turn):
        t0 = time.monotonic()
        state = {"first": None, "truncated": False}
        tokens_streamed = 0
        try:
            per_turn_seed = session.sampler.seed + 7919 * (session.turn_count + 1)
            sampler = replace(session.sampler, seed=per_turn_seed)

            if session.method == "end_to_end":
                result = yield from self._route_end_to_end(session, user_turn,
                                                           sampler, state)
            elif session.method == "modular":
                result = yield from self._route_modular(session, sampler,
                                                        user_turn, state)
            else:
                result = yield from self._route_speech_only(session, sampler,
                                                            user_turn, state)
            char_turn, degraded, streamed = result
            tokens_streamed = streamed
            first_token_at = state["first"]

            # history is committed atomically: a cancelled or failed stream
            # leaves the conversation exactly as before the turn
            session.conversation.turns.extend([user_turn, char_turn])
            session.turn_count += 2

            wav_path = None
            if char_turn.speech:
                prompt = self.assets.prompts.get(session.profile.voice_id)
                signal = self.assets.codec.decode(char_turn.speech, prompt)
                blob_name = ("resp_" + hashlib.sha256(
                    np.asarray(char_turn.speech, dtype=np.int64).tobytes()
                    + session.profile.voice_id.encode()).hexdigest()[:20] + ".wav")
                save_wav(signal, self.media_dir / blob_name)
                wav_path = f"/media/{blob_name}"

            joints = None
            fps = self.assets.tokenizers.fps
            if not char_turn.motion.empty:
                clip, _ = self.assets.tokenizers.decode_motion(char_turn.motion)
                joints = forward_kinematics(self.assets.skeleton, clip
                                            ).round(5).tolist()
                fps = clip.fps
            idle = char_turn.motion.empty
            idle_id = next(self._idle_cycle) if idle else None

            full_s = time.monotonic() - t0
            first_s = (first_token_at - t0) if first_token_at else full_s
            self._latency[session.method].add(first_s, full_s, tokens_streamed)
            yield "final", {
                "turn": {
                    "motion": {"body": char_turn.motion.body,
                               "hand": char_turn.motion.hand,
                               "transform": char_turn.motion.transform},
                    "speech": char_turn.speech,
                    "text": char_turn.text,
                },
                "wav": wav_path,
                "joints": joints,
                "fps": fps,
                "idle": idle,
                "idle_motion_id": idle_id,
                "degraded": degraded,
                "evicted_turns": session.evicted,
                "timings": {"first_token_ms": first_s * 1000.0,
                            "full_ms": full_s * 1000.0},
                "status": "degraded" if degraded else "ok",
            }
        except Exception as e:  # stream-level failures become error frames
            yield "error", {"error": type(e).__name__, "message": str(e)}
        finally:
            session.lock.release()

    # -- routes --------------------------------------------------------------

    def _context_tokens(self, session: Session, pending: Turn,
                        headroom: int) -> list[int]:
        """Rendered history + pending user turn + character role marker,
        evicting the oldest history pair (never splitting one) until the
        context leaves headroom for generation."""
        layout = self.assets.layout
        conv = session.conversation
        max_ctx = self.assets.model.cfg.max_context
        while True:
            probe = Conversation(profile=conv.profile,
                                 turns=conv.turns + [pending],
                                 topic=conv.topic, task_type=conv.task_type)
            tokens = render_with_spans(probe, layout)[0]
            tokens.append(layout.special("ROLE_CHAR"))
            if len(tokens) + headroom <= max_ctx or not conv.turns:
                return tokens
            conv.turns = conv.turns[2:]
            session.evicted += 2

    def _stream_generation(self, prefix: list[int], sampler: SamplerConfig,
                           state: dict):
        """Yields (event, data) chunks; returns the raw generated tokens."""
        layout = self.assets.layout
        stream = generate(self.assets.model, prefix, sampler)
        raw: list[int] = []
        chunk: list[int] = []
        chunk_kind = None
        motion_ranges = ("body", "hand", "transform", "SOM", "EOM", "SEP")
        for ev in stream:
            if state["first"] is None:
                state["first"] = time.monotonic()
            raw.append(ev.token)
            kind = layout.classify(ev.token)
            bucket = ("motion_chunk" if kind in motion_ranges else
                      "speech_chunk" if kind in ("speech", "SOS", "EOS") else
                      chunk_kind or "speech_chunk")
            if bucket != chunk_kind and chunk:
                yield chunk_kind, {"tokens": chunk, "t_ns": ev.timestamp_ns}
                chunk = []
            chunk_kind = bucket
            chunk.append(ev.token)
            if len(chunk) >= 8:
                yield chunk_kind, {"tokens": chunk, "t_ns": ev.timestamp_ns}
                chunk = []
        if chunk:
            yield chunk_kind, {"tokens": chunk, "t_ns": time.monotonic_ns()}
        state["truncated"] = stream.truncated
        return raw

    def _route_end_to_end(self, session: Session, user_turn: Turn,
                          sampler: SamplerConfig, state: dict):
        layout = self.assets.layout
        headroom = min(sampler.max_new_tokens,
                       self.assets.model.cfg.max_context // 2)
        context = self._context_tokens(session, user_turn, headroom)
        raw = yield from self._stream_generation(context, sampler, state)
        degraded = state["truncated"]
        try:
            char_turn = parse_character_block(raw, layout)
        except ParseError:
            degraded = True
            char_turn = self._salvage_turn(raw)
        return char_turn, degraded, len(raw)

    def _task_prefix(self, task_id: str, inputs) -> list[int]:
        layout = self.assets.layout
        tokens, _ = render_pretrain_task(task_id, inputs, _EMPTY[task_id],
                                         layout)
        role_char = layout.special("ROLE_CHAR")
        return tokens[:tokens.index(role_char) + 1]

    def _run_task(self, task_id: str, inputs, sampler: SamplerConfig,
                  stop_names: tuple[str, ...], stream: bool, state: dict):
        layout = self.assets.layout
        prefix = self._task_prefix(task_id, inputs)
        stops = frozenset(layout.special(n) for n in stop_names)
        cfg = replace(sampler, stop_tokens=stops,
                      seed=sampler.seed + len(prefix))
        if stream:
            raw = yield from self._stream_generation(prefix, cfg, state)
        else:
            gen = generate(self.assets.model, prefix, cfg)
            raw = [ev.token for ev in gen]
            if state["first"] is None:
                state["first"] = time.monotonic()
            state["truncated"] = gen.truncated
        return raw

    def _route_modular(self, session: Session, sampler: SamplerConfig,
                       user_turn: Turn, state: dict):
        """Caption the user's motion, chat in text, then t2m + tts."""
        layout = self.assets.layout
        degraded = False
        streamed = 0

        user_text = user_turn.text
        if user_text is None and user_turn.speech:
            raw = yield from self._run_task("asr", [user_turn.speech], sampler,
                                            ("EOT",), False, state)
            user_text = self._text_of(raw)
        caption = ""
        if not user_turn.motion.empty:
            raw = yield from self._run_task("m2t", [user_turn.motion], sampler,
                                            ("EOT",), False, state)
            caption = self._text_of(raw)

        chat_input = f"{session.profile.description} | {caption} | {user_text or ''}"
        raw = yield from self._run_task("chat", [chat_input], sampler, ("EOT",),
                                        False, state)
        reply_text = self._text_of(raw) or "okay"

        raw_m = yield from self._run_task("t2m", [reply_text], sampler,
                                          ("EOM", "EOT"), True, state)
        streamed += len(raw_m)
        motion = self._salvage_motion(raw_m)

        raw_s = yield from self._run_task("tts", [reply_text], sampler,
                                          ("EOS", "EOT"), True, state)
        streamed += len(raw_s)
        speech = [t - layout.speech_base for t in raw_s
                  if layout.classify(t) == "speech"]
        if not speech:
            speech = self.assets.codec.encode(
                text_to_signal(reply_text, session.profile.voice_id)).first_layer
            degraded = True
        turn = Turn(role="character", motion=motion, speech=speech,
                    text=reply_text)
        return turn, degraded, streamed

    def _route_speech_only(self, session: Session, sampler: SamplerConfig,
                           user_turn: Turn, state: dict):
        user_text = user_turn.text
        if user_text is None and user_turn.speech:
            raw = yield from self._run_task("asr", [user_turn.speech], sampler,
                                            ("EOT",), False, state)
            user_text = self._text_of(raw)
        chat_input = f"{session.profile.description} | {user_text or ''}"
        raw = yield from self._run_task("chat", [chat_input], sampler, ("EOT",),
                                        False, state)
        reply_text = self._text_of(raw) or "okay"
        raw_s = yield from self._run_task("tts", [reply_text], sampler,
                                          ("EOS", "EOT"), True, state)
        layout = self.assets.layout
        speech = [t - layout.speech_base for t in raw_s
                  if layout.classify(t) == "speech"]
        degraded = False
        if not speech:
            speech = self.assets.codec.encode(
                text_to_signal(reply_text, session.profile.voice_id)).first_layer
            degraded = True
        turn = Turn(role="character", motion=MotionTokens.none(), speech=speech,
                    text=reply_text)
        return turn, degraded, len(raw_s)

    # -- salvage helpers -----------------------------------------------------

    def _text_of(self, raw: list[int]) -> str:
        layout = self.assets.layout
        return layout.decode_text([t for t in raw
                                   if layout.classify(t) == "text"]).strip()

    def _salvage_motion(self, raw: list[int]) -> MotionTokens:
        layout = self.assets.layout
        body = [t - layout.body_base for t in raw
                if layout.classify(t) == "body"]
        hand = [t - layout.hand_base for t in raw
                if layout.classify(t) == "hand"]
        transform = next((t - layout.transform_base for t in raw
                          if layout.classify(t) == "transform"), None)
        n = min(len(body), len(hand))
        if n == 0:
            return MotionTokens.none()
        if transform is None:
            transform = 0
        return MotionTokens(body=body[:n], hand=hand[:n], transform=transform)

    def _salvage_turn(self, raw: list[int]) -> Turn:
        layout = self.assets.layout
        motion = self._salvage_motion(raw)
        speech = [t - layout.speech_base for t in raw
                  if layout.classify(t) == "speech"]
        if motion.empty and not speech:
            speech = [0]
        return Turn(role="character", motion=motion, speech=speech)


# placeholder outputs used to build task prefixes (cut before the output block)
_EMPTY = {
    "t2m": MotionTokens(body=[0], hand=[0], transform=0),
    "m2t": "x",
    "interx": MotionTokens(body=[0], hand=[0], transform=0),
    "tts": [0],
    "asr": "x",
    "s2s": [0],
    "chat": "x",
}
