import numpy as np
import pytest

from motionchat.motion import MotionClip, RelativeTransform, rotmat_to_cont6d


def rodrigues(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def sine_clip(seed, frames=64, body=5, hand=3, fps=20.0):
    """Smooth synthetic motion: per-joint sinusoidal axis-angle rotations."""
    rng = np.random.default_rng(seed)
    t = np.arange(frames) / fps

    def joint_track(n):
        rots = np.zeros((frames, n, 6), dtype=np.float32)
        for j in range(n):
            axis = rng.standard_normal(3)
            amp = rng.uniform(0.2, 1.2)
            freq = rng.uniform(0.3, 1.5)
            phase = rng.uniform(0, 2 * np.pi)
            for f in range(frames):
                R = rodrigues(axis, amp * np.sin(2 * np.pi * freq * t[f] + phase))
                rots[f, j] = rotmat_to_cont6d(R)
        return rots

    transl = np.stack([
        0.3 * np.sin(2 * np.pi * rng.uniform(0.2, 0.6) * t + rng.uniform(0, 6)),
        np.full(frames, 0.9),
        0.3 * np.cos(2 * np.pi * rng.uniform(0.2, 0.6) * t + rng.uniform(0, 6)),
    ], axis=1).astype(np.float32)
    return MotionClip(fps=fps, body_rot=joint_track(body), hand_rot=joint_track(hand),
                      root_transl=transl)


def sine_clips(n, seed=0, **kwargs):
    return [sine_clip(seed + i, **kwargs) for i in range(n)]


def random_transform(seed):
    rng = np.random.default_rng(seed)
    from .test_rotation import random_rotation
    return RelativeTransform(rotation=rotmat_to_cont6d(random_rotation(rng)),
                             translation=rng.uniform(-2, 2, 3))


def small_skeleton():
    from motionchat.motion import SkeletonSpec
    offsets = np.array([[0, 0, 0], [0, 0.2, 0], [0.15, 0.05, 0], [0.2, 0, 0],
                        [0.1, 0, 0.05], [0.1, -0.3, 0], [0, -0.3, 0],
                        [0, -0.05, 0.1]])
    return SkeletonSpec([f"j{i}" for i in range(8)], [-1, 0, 1, 2, 3, 0, 5, 6],
                        offsets, body_joints=5)


@pytest.fixture(scope="session")
def small_clips():
    from motionchat.fixtures import fixture_clips
    return fixture_clips(50, skeleton=small_skeleton())


class MiniStack:
    """Session-scoped miniature of the full pipeline for integration tests."""

    def __init__(self):
        import torch

        from motionchat.fixtures import (FIXTURE_PROFILES, FIXTURE_S2S,
                                         FIXTURE_SENTENCES, entry_transforms,
                                         fixture_motion_entries)
        from motionchat.speech import text_to_signal, train_speech_codec
        from motionchat.synthesis import (HashedTfidfEmbedder, MockTextGen, Topic,
                                          build_index, consolidate_captions,
                                          generate_dialogue, item_to_conversation)
        from motionchat.template import CharacterProfile, VocabLayout
        from motionchat.trainer import (Stage1Plan, Stage2Plan, Stage3Plan,
                                        StagePlan, run_stage1)
        from motionchat.checkpoint import load_checkpoint
        from motionchat.tokenizer import MotionTokenizerSet
        import tempfile

        torch.set_num_threads(2)
        self.skeleton = small_skeleton()
        self.textgen = MockTextGen(seed=0)
        self.entries = fixture_motion_entries(36, self.skeleton, frames=32)
        for e in self.entries:
            e.consolidated_caption = consolidate_captions(e, self.textgen)
        self.rels = entry_transforms(self.entries)

        self.layout = VocabLayout(body_size=64, hand_size=64, transform_size=16,
                                  speech_size=256)
        self.plan = StagePlan(
            seed=0, layout=self.layout,
            model={"layers": 2, "heads": 2, "model_dim": 64, "ff_dim": 128,
                   "max_context": 768},
            stage1=Stage1Plan(steps=40, batch_size=8,
                              body={"code_dim": 32, "width": 32, "window": 16},
                              hand={"code_dim": 32, "width": 32, "window": 16},
                              transform={"code_dim": 16, "width": 32}),
            stage2=Stage2Plan(steps=30, batch_size=4, lr=1e-3, eval_every=10),
            stage3=Stage3Plan(steps=30, batch_size=2, lr=1e-3, eval_every=10),
        )
        self.workdir = tempfile.mkdtemp(prefix="mini_stack_")
        ck_path = run_stage1(self.entries, self.rels, self.plan, self.workdir)
        ck = load_checkpoint(ck_path, expect_kind="motion-tokenizer")
        self.tokenizers = MotionTokenizerSet.from_state(ck.config, ck.tensors)

        voices = [p["voice_id"] for p in FIXTURE_PROFILES] + ["user_default"]
        corpus = [text_to_signal(t, v) for v in voices
                  for t in FIXTURE_SENTENCES[:12]]
        self.codec = train_speech_codec(corpus, seed=0)
        self.sentences = FIXTURE_SENTENCES
        self.s2s_pairs = FIXTURE_S2S
        self.voices = voices

        self.embedder = HashedTfidfEmbedder().fit(
            [e.consolidated_caption for e in self.entries])
        self.index = build_index(self.entries, self.embedder)
        self.profiles = [CharacterProfile(name=p["name"],
                                          description=p["description"],
                                          voice_id=p["voice_id"],
                                          motion_tags=p["motion_tags"])
                         for p in FIXTURE_PROFILES]
        self.topics = [Topic(id=f"t{i}", text=t, source="daily")
                       for i, t in enumerate([
                           "morning greetings", "favorite dances",
                           "weather small talk", "how to stay active"])]
        self.items = []
        task_types = ["common", "motion_understanding", "instruction_following",
                      "imitation"]
        for i in range(16):
            self.items.append(generate_dialogue(
                self.profiles[i % len(self.profiles)],
                self.topics[i % len(self.topics)],
                task_types[i % len(task_types)], "auto", self.textgen,
                self.entries, self.index, self.embedder,
                rounds_target=1 + i % 2, seed=100 + i))
        self.dialogues = [item_to_conversation(
            item, {e.motion_id: e for e in self.entries}, self.rels,
            self.tokenizers, self.codec) for item in self.items]


@pytest.fixture(scope="session")
def mini():
    return MiniStack()
