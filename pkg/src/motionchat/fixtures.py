"""Synthetic desk-scale corpora: motion families, voices, profiles, topics.

Fabricated data stands in for motion-capture and speech datasets so the full
pipeline runs on a laptop. Clips come in named families (wave, bow, ...) with
per-variant amplitude/speed/phase jitter, so the corpus carries the
cross-sample structure tokenizers and retrieval need.
"""

from __future__ import annotations

import numpy as np

from .motion.clip import MotionClip, MotionTextEntry, RelativeTransform
from .motion.rotation import rotmat_to_cont6d
from .motion.skeleton import SkeletonSpec, default_skeleton


def _rodrigues(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return np.eye(3)
    axis = axis / n
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


# (family, caption templates, active body joints, paired partner family or None)
# joint indices refer to default_skeleton order; for small test skeletons the
# indices are taken modulo the joint count.
_FAMILIES = [
    ("wave", ["a person waves with the right hand",
              "someone raises the right arm and waves"], [11, 12, 13], None),
    ("bow", ["a person bows forward politely",
             "someone bends at the waist in a bow"], [1, 2, 3], None),
    ("clap", ["a person claps both hands",
              "someone applauds with both hands"], [7, 8, 9, 11, 12, 13], None),
    ("point", ["a person points ahead with one arm",
               "someone extends an arm to point forward"], [11, 12], None),
    ("nod", ["a person nods the head in agreement",
             "someone nods yes"], [4, 5], None),
    ("shake_head", ["a person shakes the head in refusal",
                    "someone shakes the head no"], [4, 5], None),
    ("jump", ["a person jumps in place",
              "someone hops up and down"], [14, 15, 18, 19], None),
    ("squat", ["a person squats down and stands up",
               "someone does a squat"], [14, 15, 16, 18, 19, 20], None),
    ("stretch", ["a person stretches both arms overhead",
                 "someone reaches up to stretch"], [7, 8, 11, 12], None),
    ("kick", ["a person kicks with the right leg",
              "someone performs a forward kick"], [18, 19, 20], None),
    ("spin", ["a person spins around in place",
              "someone turns a full circle"], [0, 1], None),
    ("crouch", ["a person crouches low to the ground",
                "someone ducks down into a crouch"], [1, 14, 15, 18, 19], None),
    ("handshake_a", ["a person offers a handshake",
                     "someone extends the right hand to shake"], [11, 12, 13],
     "handshake_b"),
    ("handshake_b", ["a person accepts a handshake",
                     "someone grasps the offered hand"], [11, 12, 13], "handshake_a"),
    ("highfive_a", ["a person raises a hand for a high five",
                    "someone initiates a high five"], [11, 12], "highfive_b"),
    ("highfive_b", ["a person returns a high five",
                    "someone slaps the raised hand"], [11, 12], "highfive_a"),
    ("bow_greet_a", ["a person bows in greeting to another",
                     "someone bows toward a partner"], [1, 2, 3], "bow_greet_b"),
    ("bow_greet_b", ["a person returns a greeting bow",
                     "someone bows back"], [1, 2, 3], "bow_greet_a"),
]

_STYLES = ["slowly", "quickly", "with energy", "casually", "twice", "broadly",
           "gently", "sharply", "once", "rhythmically"]


def family_names() -> list[str]:
    return [f[0] for f in _FAMILIES]


def fixture_clip(family_idx: int, variant: int, skeleton: SkeletonSpec,
                 frames: int = 64, fps: float = 20.0) -> MotionClip:
    """One clip of a family: shared joint axes/frequencies, jittered per variant."""
    name, _, joints, _ = _FAMILIES[family_idx % len(_FAMILIES)]
    fam_rng = np.random.default_rng(1000 + family_idx)
    var_rng = np.random.default_rng(7000 + 97 * family_idx + variant)
    body_n, hand_n = skeleton.body_joints, skeleton.joint_count - skeleton.body_joints

    t = np.arange(frames) / fps
    speed = var_rng.uniform(0.85, 1.15)
    amp_scale = var_rng.uniform(0.75, 1.25)
    phase0 = var_rng.uniform(0, 2 * np.pi)

    def tracks(n, offset):
        rots = np.zeros((frames, n, 6), dtype=np.float32)
        rots[:, :, 0] = 1.0
        rots[:, :, 4] = 1.0
        active = [j % n for j in joints] if offset == 0 else \
            [(j + offset) % n for j in joints[:2]]
        params = {}
        for j in range(n):
            jr = np.random.default_rng(fam_rng.integers(1 << 31))
            if j in active:
                params[j] = (jr.standard_normal(3), jr.uniform(0.5, 1.1),
                             jr.uniform(0.4, 1.0), jr.uniform(0, 2 * np.pi))
            else:
                params[j] = (jr.standard_normal(3), 0.04, jr.uniform(0.2, 0.5),
                             jr.uniform(0, 2 * np.pi))
        for j, (axis, amp, freq, ph) in params.items():
            angles = amp * amp_scale * np.sin(2 * np.pi * freq * speed * t + ph + phase0)
            for f in range(frames):
                rots[f, j] = rotmat_to_cont6d(_rodrigues(axis, angles[f]))
        return rots

    sway = 0.05 * amp_scale
    transl = np.stack([
        sway * np.sin(2 * np.pi * 0.4 * speed * t + phase0),
        0.9 + 0.03 * np.sin(2 * np.pi * 0.8 * speed * t),
        sway * np.cos(2 * np.pi * 0.3 * speed * t + phase0),
    ], axis=1).astype(np.float32)
    return MotionClip(fps=fps, body_rot=tracks(body_n, 0),
                      hand_rot=tracks(hand_n, 3) if hand_n else
                      np.zeros((frames, 0, 6), dtype=np.float32),
                      root_transl=transl)


def fixture_transform(family_idx: int, variant: int) -> RelativeTransform:
    """Facing-partner relative pose for paired families, near-identity otherwise."""
    _, _, _, partner = _FAMILIES[family_idx % len(_FAMILIES)]
    rng = np.random.default_rng(3000 + 31 * family_idx + variant)
    if partner is not None:
        angle = np.pi + rng.uniform(-0.3, 0.3)
        dist = rng.uniform(0.8, 1.4)
    else:
        angle = rng.uniform(-0.4, 0.4)
        dist = rng.uniform(0.0, 0.4)
    R = _rodrigues([0, 1, 0], angle)
    return RelativeTransform(rotation=rotmat_to_cont6d(R),
                             translation=np.array([dist * np.sin(angle), 0.0,
                                                   dist * np.cos(angle)]))


def fixture_motion_entries(n_clips: int, skeleton: SkeletonSpec | None = None,
                           frames: int = 64, fps: float = 20.0
                           ) -> list[MotionTextEntry]:
    """Motion database with captions; paired families link via partner_id."""
    skeleton = skeleton or default_skeleton()
    entries = []
    fam_count = len(_FAMILIES)
    per_family = (n_clips + fam_count - 1) // fam_count
    made = {}
    for variant in range(per_family):
        for fi, (name, caps, _, partner) in enumerate(_FAMILIES):
            if len(entries) >= n_clips and partner is None:
                continue
            motion_id = f"{name}_{variant:03d}"
            style = _STYLES[(fi * 7 + variant) % len(_STYLES)]
            captions = [caps[0], f"{caps[1]}, {style}, take {variant:03d}"]
            entries.append(MotionTextEntry(
                motion_id=motion_id,
                clip=fixture_clip(fi, variant, skeleton, frames=frames, fps=fps),
                captions=captions,
                consolidated_caption=None,
                partner_id=f"{partner}_{variant:03d}" if partner else None,
            ))
            made[motion_id] = True
    entries = entries[:max(n_clips, 1)]
    ids = {e.motion_id for e in entries}
    for e in entries:
        if e.partner_id is not None and e.partner_id not in ids:
            e.partner_id = None
    return entries


def fixture_clips(n: int, skeleton: SkeletonSpec | None = None, frames: int = 64,
                  fps: float = 20.0) -> list[MotionClip]:
    return [e.clip for e in fixture_motion_entries(n, skeleton, frames, fps)]


def fixture_transforms(n: int) -> list[RelativeTransform]:
    return [fixture_transform(i % len(_FAMILIES), i // len(_FAMILIES))
            for i in range(n)]


def entry_transforms(entries: list[MotionTextEntry]) -> dict[str, RelativeTransform]:
    """Relative transform per entry: derived from the clip pair when a partner
    exists, identity otherwise."""
    from .motion.clip import relative_transform_between

    by_id = {e.motion_id: e for e in entries}
    rels = {}
    for e in entries:
        if e.partner_id and e.partner_id in by_id:
            rels[e.motion_id] = relative_transform_between(
                e.clip, by_id[e.partner_id].clip)
        else:
            rels[e.motion_id] = RelativeTransform.identity()
    return rels


FIXTURE_PROFILES = [
    {"name": "Nova", "voice_id": "voice_nova",
     "description": "an upbeat android guide who loves showing off dance moves",
     "motion_tags": ["wave", "spin", "stretch"]},
    {"name": "Bram", "voice_id": "voice_bram",
     "description": "a gruff old knight of few words and firm bows",
     "motion_tags": ["bow", "point", "kick"]},
    {"name": "Lumi", "voice_id": "voice_lumi",
     "description": "a playful forest sprite that hops around and claps",
     "motion_tags": ["jump", "clap", "nod"]},
    {"name": "Rex", "voice_id": "voice_rex",
     "description": "a laconic space ranger with a crisp salute",
     "motion_tags": ["point", "squat", "shake_head"]},
]

FIXTURE_TOPICS = {
    "character": [
        "your favorite dance move", "life as a machine", "guarding the old castle",
        "tales from the deep forest", "patrolling the outer rim",
        "the best greeting for a stranger",
    ],
    "news": [
        "a new bridge opened in town", "the weather turned cold this week",
        "a festival is coming next month", "the market was busy today",
    ],
    "daily": [
        "what to eat for breakfast", "morning exercise habits",
        "keeping a tidy room", "walking in the park", "learning a new skill",
    ],
    "qa": [
        "why do people wave hello", "how do you cheer someone up",
        "what makes a good handshake", "why do we stretch after sitting",
        "how to stay calm when surprised",
    ],
}

FIXTURE_SENTENCES = [
    "hello there", "nice to meet you", "how are you today", "i am doing well",
    "what a lovely day", "let us begin", "that sounds great", "tell me more",
    "i like this song", "watch me move", "here we go", "that was close",
    "good job team", "see you tomorrow", "thanks a lot", "no problem at all",
    "come over here", "look at that", "time to go", "stay right there",
    "one more time", "follow my lead", "well done friend", "take a deep breath",
    "ready when you are", "this is exciting", "slow down a bit", "speed it up",
    "hold that pose", "nearly finished now", "keep it steady", "all set here",
]

FIXTURE_S2S = [
    ("how are you", "i am fine"), ("what is your name", "call me nova"),
    ("can you dance", "of course i can"), ("is it cold", "yes quite cold"),
    ("where are we", "in the plaza"), ("shall we start", "yes let us start"),
    ("did you see that", "i saw it all"), ("are you ready", "always ready"),
    ("who goes there", "a friend of yours"), ("what time is it", "time to move"),
    ("do you like music", "very much so"), ("can we rest", "a short rest then"),
]


def write_fixture_tree(out_dir, n_clips: int = 220, frames: int = 64,
                       fps: float = 20.0):
    """Write the complete fixture data tree consumed by the CLI pipeline."""
    import json
    from pathlib import Path

    from .motion.database import save_motion_db
    from .motion.skeleton import save_skeleton
    from .speech.synth import voice_prompt
    from .speech.wav import save_wav

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    skeleton = default_skeleton()
    save_skeleton(skeleton, out_dir / "skeleton.txt")
    entries = fixture_motion_entries(n_clips, skeleton, frames=frames, fps=fps)
    save_motion_db(entries, out_dir / "motion.mdb")

    for tag, texts in FIXTURE_TOPICS.items():
        lines = []
        for t in texts:
            affinity = ""
            if tag == "character":
                affinity = "\t" + ",".join(p["name"] for p in FIXTURE_PROFILES[:2])
            lines.append(f"{tag}\t{t}{affinity}")
        (out_dir / f"topics_{tag}.txt").write_text("\n".join(lines) + "\n",
                                                   encoding="utf-8")

    (out_dir / "sentences.txt").write_text(
        "\n".join(FIXTURE_SENTENCES) + "\n", encoding="utf-8")
    (out_dir / "s2s.txt").write_text(
        "\n".join(f"{q}\t{a}" for q, a in FIXTURE_S2S) + "\n", encoding="utf-8")
    with open(out_dir / "profiles.json", "w", encoding="utf-8") as f:
        json.dump(FIXTURE_PROFILES, f, indent=2)
        f.write("\n")

    prompt_dir = out_dir / "prompts"
    prompt_dir.mkdir(exist_ok=True)
    for p in FIXTURE_PROFILES:
        prompt = voice_prompt(p["name"], p["voice_id"], seconds=5.0)
        save_wav(prompt.signal, prompt_dir / f"{p['voice_id']}.wav")
    return out_dir
