"""Dataset finalization: speech synthesis, token conversion, manifest."""

from __future__ import annotations

import hashlib
import io
import json
import wave
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..motion.clip import MotionTextEntry, RelativeTransform
from ..speech.codec import SpeechCodec
from ..speech.synth import SpeechSignal, text_to_signal, voice_params
from ..template.convo import Conversation, Turn
from ..template.interchange import save_conversations
from .dialogue import DialogueItem

USER_VOICE = "user_default"


def _wav_bytes(signal: SpeechSignal) -> bytes:
    pcm = np.clip(np.asarray(signal.samples, dtype=np.float64), -1.0, 1.0)
    data = (pcm * 32767.0).round().astype("<i2").tobytes()
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(signal.sample_rate)
        w.writeframes(data)
    return buf.getvalue()


def _file_sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def item_to_conversation(item: DialogueItem, entries_by_id: dict,
                         rels: dict[str, RelativeTransform], tokenizers,
                         codec: SpeechCodec) -> Conversation:
    """Tokenize a dialogue item into the template's Conversation form."""
    conv = Conversation(profile=item.profile, topic=item.topic.text,
                        task_type=item.task_type)
    for r in item.rounds:
        entry: MotionTextEntry = entries_by_id[r.motion_id]
        rel = rels.get(r.motion_id) or RelativeTransform.identity()
        motion = tokenizers.encode_motion(entry.clip, rel)
        voice = item.profile.voice_id if r.role == "character" else USER_VOICE
        speech = codec.encode(text_to_signal(r.speech_text, voice)).first_layer
        conv.turns.append(Turn(role=r.role, motion=motion, speech=speech,
                               text=r.speech_text))
    return conv.validate()


def finalize_dataset(items: list[DialogueItem], entries: list[MotionTextEntry],
                     rels: dict[str, RelativeTransform], tokenizers,
                     codec: SpeechCodec, out_dir) -> dict:
    """Render WAVs, tokenize dialogues, and write the dataset manifest.

    Idempotent: files whose recorded checksum already matches on disk are not
    rewritten; a second run writes zero new files.
    """
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    entries_by_id = {e.motion_id: e for e in entries}
    known_voices = {USER_VOICE}

    conversations = []
    manifest_items = []
    files: dict[str, str] = {}
    written = 0
    skipped = 0
    for i, item in enumerate(items):
        if not item.profile.voice_id:
            raise ConfigError(f"item {i}: profile {item.profile.name!r} has no "
                              f"voice_id")
        known_voices.add(item.profile.voice_id)
        wav_refs = []
        for j, r in enumerate(item.rounds):
            voice = item.profile.voice_id if r.role == "character" else USER_VOICE
            blob = _wav_bytes(text_to_signal(r.speech_text, voice))
            sha = hashlib.sha256(blob).hexdigest()
            rel_path = f"wav/item{i:04d}_r{j:02d}.wav"
            path = out_dir / rel_path
            if path.exists() and _file_sha(path) == sha:
                skipped += 1
            else:
                path.write_bytes(blob)
                written += 1
            files[rel_path] = sha
            wav_refs.append(rel_path)
        conversations.append(item_to_conversation(item, entries_by_id, rels,
                                                  tokenizers, codec))
        manifest_items.append({
            "index": i, "profile": item.profile.name, "topic": item.topic.id,
            "task_type": item.task_type, "strategy": item.strategy,
            "rounds": len(item.rounds),
            "motion_ids": [r.motion_id for r in item.rounds],
            "wavs": wav_refs,
        })

    convo_path = out_dir / "dialogues.txt"
    save_conversations(conversations, convo_path)
    files["dialogues.txt"] = _file_sha(convo_path)
    manifest = {
        "version": 1,
        "items": manifest_items,
        "files": dict(sorted(files.items())),
        "written": written,
        "skipped": skipped,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def verify_manifest(out_dir) -> list[str]:
    """Paths whose on-disk checksum no longer matches the manifest."""
    out_dir = Path(out_dir)
    with open(out_dir / "manifest.json", encoding="utf-8") as f:
        manifest = json.load(f)
    bad = []
    for rel_path, sha in manifest["files"].items():
        p = out_dir / rel_path
        if not p.exists() or _file_sha(p) != sha:
            bad.append(rel_path)
    return bad
