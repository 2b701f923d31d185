"""Asset loading for the serving stack."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..checkpoint import load_checkpoint
from ..errors import ConfigError
from ..fixtures import entry_transforms
from ..lm.model import CausalTransformer
from ..motion.database import load_motion_db
from ..motion.skeleton import load_skeleton
from ..speech.codec import SpeechCodec
from ..speech.synth import VoicePrompt
from ..speech.wav import load_wav
from ..synthesis.embedding import HashedTfidfEmbedder, build_index
from ..template.convo import CharacterProfile
from ..template.vocab import VocabLayout
from .service import ServerAssets


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8090
    data_dir: str = "data"
    checkpoint_dir: str = "checkpoints"
    lm_checkpoint: str = ""  # default: <checkpoint_dir>/stage3.ckpt
    media_dir: str = ""      # default: <checkpoint_dir>/media
    default_method: str = "end_to_end"

    @staticmethod
    def load(path=None, env=os.environ) -> "ServerConfig":
        cfg = ServerConfig()
        if path:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"server config not found: {p}")
            try:
                data = json.loads(p.read_text())
            except json.JSONDecodeError as e:
                raise ConfigError(f"{p}: invalid JSON: {e}") from e
            for k, v in data.items():
                if not hasattr(cfg, k):
                    raise ConfigError(f"{p}: unknown server config key {k!r}")
                setattr(cfg, k, v)
        for k in vars(cfg):
            env_key = f"MOTIONCHAT_{k.upper()}"
            if env_key in env:
                value = env[env_key]
                setattr(cfg, k, int(value) if k == "port" else value)
        return cfg


def load_assets(data_dir, checkpoint_dir, lm_checkpoint=None) -> ServerAssets:
    data_dir = Path(data_dir)
    checkpoint_dir = Path(checkpoint_dir)
    for required in (data_dir / "motion.mdb", data_dir / "profiles.json",
                     data_dir / "skeleton.txt"):
        if not required.exists():
            raise ConfigError(f"missing data file: {required}")
    tok_path = checkpoint_dir / "tokenizers.ckpt"
    codec_path = checkpoint_dir / "speech_codec.ckpt"
    lm_path = Path(lm_checkpoint) if lm_checkpoint else checkpoint_dir / "stage3.ckpt"
    for required in (tok_path, codec_path, lm_path):
        if not required.exists():
            raise ConfigError(f"missing checkpoint: {required}")

    from ..tokenizer.vqvae import MotionTokenizerSet

    ck = load_checkpoint(tok_path, expect_kind="motion-tokenizer")
    tokenizers = MotionTokenizerSet.from_state(ck.config, ck.tensors)
    ck = load_checkpoint(codec_path, expect_kind="speech-codec")
    codec = SpeechCodec.from_state(ck.config, ck.tensors)
    ck = load_checkpoint(lm_path, expect_kind="lm")
    model = CausalTransformer.from_state(ck.config, ck.tensors)
    layout = VocabLayout.from_dict(ck.extra["layout"]) if "layout" in ck.extra \
        else VocabLayout()

    entries = load_motion_db(data_dir / "motion.mdb")
    skeleton = load_skeleton(data_dir / "skeleton.txt")
    with open(data_dir / "profiles.json", encoding="utf-8") as f:
        raw_profiles = json.load(f)
    profiles = {p["name"]: CharacterProfile(
        name=p["name"], description=p["description"], voice_id=p["voice_id"],
        motion_tags=p.get("motion_tags", [])) for p in raw_profiles}

    prompts = {}
    prompt_dir = data_dir / "prompts"
    if prompt_dir.exists():
        for wav in sorted(prompt_dir.glob("*.wav")):
            prompts[wav.stem] = VoicePrompt(character_id=wav.stem,
                                            signal=load_wav(wav))

    embedder = HashedTfidfEmbedder().fit(
        [e.consolidated_caption or "; ".join(e.captions) for e in entries])
    index = build_index(entries, embedder)
    idle_ids = [e.motion_id for e in entries
                if e.motion_id.startswith(("nod_", "stretch_"))][:4]
    if not idle_ids:
        idle_ids = [entries[0].motion_id]
    return ServerAssets(tokenizers=tokenizers, codec=codec, model=model,
                        layout=layout, skeleton=skeleton, profiles=profiles,
                        prompts=prompts, entries=entries,
                        rels=entry_transforms(entries), embedder=embedder,
                        index=index, idle_ids=idle_ids)
