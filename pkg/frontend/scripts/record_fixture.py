"""Record a scripted server session into the web client's test fixture.

Builds a small self-contained serving stack (fixture corpora, quick-trained
tokenizers and a briefly tuned model), drives a 10-turn scripted session over
the real HTTP surface, and captures every SSE body plus the history endpoint
after each turn. Regenerate with:

    python frontend/scripts/record_fixture.py
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np
import torch
from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parents[2]
OUT = ROOT / "frontend" / "test" / "fixtures" / "recorded_session.json"

from motionchat.checkpoint import load_checkpoint
from motionchat.fixtures import (FIXTURE_PROFILES, FIXTURE_SENTENCES,
                                 entry_transforms, fixture_motion_entries)
from motionchat.lm.model import CausalTransformer
from motionchat.motion.skeleton import default_skeleton
from motionchat.server import InteractionService, ServerAssets, build_app
from motionchat.speech import text_to_signal, train_speech_codec, voice_prompt
from motionchat.synthesis import (HashedTfidfEmbedder, MockTextGen, Topic,
                                  build_index, consolidate_captions,
                                  generate_dialogue, item_to_conversation)
from motionchat.template import CharacterProfile, VocabLayout
from motionchat.tokenizer import MotionTokenizerSet
from motionchat.trainer import (Stage1Plan, Stage3Plan, StagePlan, run_stage1,
                                run_stage3)


def build_service(workdir: Path) -> InteractionService:
    torch.set_num_threads(2)
    skeleton = default_skeleton()
    textgen = MockTextGen(seed=0)
    entries = fixture_motion_entries(40, skeleton, frames=32)
    for e in entries:
        e.consolidated_caption = consolidate_captions(e, textgen)
    rels = entry_transforms(entries)
    layout = VocabLayout(body_size=128, hand_size=128, transform_size=32,
                         speech_size=256)
    plan = StagePlan(
        seed=0, layout=layout,
        model={"layers": 2, "heads": 2, "model_dim": 64, "ff_dim": 128,
               "max_context": 1024},
        stage1=Stage1Plan(steps=60, batch_size=8,
                          body={"code_dim": 32, "width": 32},
                          hand={"code_dim": 32, "width": 32},
                          transform={"code_dim": 16, "width": 32}),
        stage3=Stage3Plan(steps=260, batch_size=4, lr=1.5e-3, eval_every=100),
    )
    ck_path = run_stage1(entries, rels, plan, workdir)
    ck = load_checkpoint(ck_path, expect_kind="motion-tokenizer")
    tokenizers = MotionTokenizerSet.from_state(ck.config, ck.tensors)

    voices = [p["voice_id"] for p in FIXTURE_PROFILES] + ["user_default"]
    corpus = [text_to_signal(t, v) for v in voices for t in FIXTURE_SENTENCES[:12]]
    codec = train_speech_codec(corpus, seed=0)

    embedder = HashedTfidfEmbedder().fit([e.consolidated_caption for e in entries])
    index = build_index(entries, embedder)
    profiles = [CharacterProfile(name=p["name"], description=p["description"],
                                 voice_id=p["voice_id"],
                                 motion_tags=p["motion_tags"])
                for p in FIXTURE_PROFILES]
    topics = [Topic(id=f"t{i}", text=t, source="daily")
              for i, t in enumerate(["morning greetings", "favorite dances"])]
    items = [generate_dialogue(profiles[i % 2], topics[i % 2], "common", "m1",
                               textgen, entries, index, embedder,
                               rounds_target=2, seed=50 + i) for i in range(12)]
    dialogues = [item_to_conversation(it, {e.motion_id: e for e in entries},
                                      rels, tokenizers, codec) for it in items]
    run_stage3(dialogues, plan, workdir / "s3", init_checkpoint=None)
    ck = load_checkpoint(workdir / "s3" / "stage3.ckpt", expect_kind="lm")
    model = CausalTransformer.from_state(ck.config, ck.tensors)

    prompts = {p.voice_id: voice_prompt(p.name, p.voice_id) for p in profiles}
    prompts["user_default"] = voice_prompt("user", "user_default")
    assets = ServerAssets(
        tokenizers=tokenizers, codec=codec, model=model, layout=layout,
        skeleton=skeleton, profiles={p.name: p for p in profiles},
        prompts=prompts, entries=entries, rels=rels, embedder=embedder,
        index=index,
        idle_ids=[e.motion_id for e in entries
                  if e.motion_id.startswith(("nod_", "stretch_"))][:3])
    service = InteractionService(assets, media_dir=workdir / "media")
    from dataclasses import replace

    service.default_sampler = replace(service.default_sampler, temperature=1e-6,
                                      top_k=1, max_new_tokens=96, seed=7)
    return service


def main():
    workdir = Path(tempfile.mkdtemp(prefix="record_fixture_"))
    service = build_service(workdir)
    client = TestClient(build_app(service))

    recording = {
        "profiles": client.get("/profiles").json(),
        "skeleton": client.get("/skeleton").json(),
        "idle": client.get("/idle-motions").json(),
        "search": {"q": "a person waves with the right hand",
                   "results": client.get("/motions/search", params={
                       "q": "a person waves with the right hand",
                       "k": 4}).json()},
    }
    idle_details = {}
    for idle_id in recording["idle"]["ids"]:
        idle_details[idle_id] = client.get(f"/motions/{idle_id}").json()
    recording["motions"] = idle_details

    profile = recording["profiles"][0]["profile_id"]
    sid = client.post("/sessions", json={"profile_id": profile,
                                         "method": "end_to_end"}).json()[
        "session_id"]
    texts = ["hello there", "show me a wave", "can you bow", "nice move",
             "do it again", "what next", "follow my lead", "well done",
             "one more time", "goodbye now"]
    turns = []
    for i, text in enumerate(texts):
        request = {"speech": {"text": text}}
        if i % 3 == 1:
            request["motion"] = {"motion_id": "wave_000"}
        with client.stream("POST", f"/sessions/{sid}/turn", json=request) as r:
            sse_text = "".join(r.iter_text())
        history = client.get(f"/sessions/{sid}/history").json()
        turns.append({"request": request, "sse": sse_text, "history": history})
    recording["turns"] = turns
    recording["session_id"] = sid

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(recording, indent=1))
    sizes = OUT.stat().st_size // 1024
    finals = sum(1 for t in turns if '"joints": [[' in t["sse"]
                 or '"joints": [[[' in t["sse"])
    print(f"wrote {OUT} ({sizes} KiB, {len(turns)} turns)")


if __name__ == "__main__":
    main()
