"""Offline evaluation of a tuned checkpoint on held-out dialogues."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..lm.sampler import SamplerConfig, generate_tokens
from ..metrics.distribution import diversity, fid
from ..metrics.features import motion_feature_set
from ..metrics.pose_error import angle_error, pa_mpjpe
from ..metrics.voice import vc_similarity
from ..template.codec import parse_character_block, render_with_spans
from ..template.convo import Conversation
from ..errors import ParseError


def generate_character_turn(model, layout, conv_prefix: Conversation,
                            sampler: SamplerConfig):
    """Render context + role marker, generate until EOT, parse the block."""
    context = render_with_spans(conv_prefix, layout)[0]
    context.append(layout.special("ROLE_CHAR"))
    cfg = replace(sampler, stop_tokens=frozenset({layout.special("EOT")}))
    raw, stream = generate_tokens(model, context, cfg)
    try:
        return parse_character_block(raw, layout), stream.truncated
    except ParseError:
        return None, True


def run_evaluation(model, layout, tokenizers, codec, skeleton, prompts,
                   dialogues: list[Conversation], n_samples: int = 16,
                   seed: int = 0, sampler: SamplerConfig | None = None) -> list[dict]:
    """Sample held-out character turns, regenerate them, and score.

    Returns report rows (metric/value/detail). FID and diversity use the
    frozen body-tokenizer encoder features; numbers are comparable only
    within that extractor.
    """
    rng = np.random.default_rng(seed)
    sampler = sampler or SamplerConfig(temperature=0.7, top_k=40,
                                       max_new_tokens=256, seed=seed)
    cases = []
    for di, conv in enumerate(dialogues):
        for ti, turn in enumerate(conv.turns):
            if turn.role == "character" and not turn.motion.empty:
                cases.append((di, ti))
    if not cases:
        return [{"metric": "error", "value": "no character turns to evaluate"}]
    picks = rng.permutation(len(cases))[:n_samples]

    gen_clips, gt_clips = [], []
    pa_errors, ang_errors, vc_scores = [], [], []
    valid = 0
    total = 0
    for ci in picks:
        di, ti = cases[int(ci)]
        conv = dialogues[di]
        prefix = Conversation(profile=conv.profile, turns=conv.turns[:ti],
                              topic=conv.topic, task_type=conv.task_type)
        total += 1
        turn, truncated = generate_character_turn(
            model, layout, prefix, replace(sampler, seed=seed + int(ci)))
        if turn is None or turn.motion.empty:
            continue
        valid += 1
        gen_clip, _ = tokenizers.decode_motion(turn.motion)
        gt_clip, _ = tokenizers.decode_motion(conv.turns[ti].motion)
        frames = min(gen_clip.frames, gt_clip.frames)
        gen_cut = _crop(gen_clip, frames)
        gt_cut = _crop(gt_clip, frames)
        gen_clips.append(gen_clip)
        gt_clips.append(gt_clip)
        pa_errors.append(pa_mpjpe(gen_cut, gt_cut, skeleton))
        ang_errors.append(angle_error(gen_cut, gt_cut))
        if turn.speech:
            prompt = prompts.get(conv.profile.voice_id)
            if prompt is not None:
                wav = codec.decode(turn.speech, prompt)
                vc_scores.append(vc_similarity(wav, prompt.signal))

    rows = [{"metric": "pred_valid", "value": round(valid / total, 4),
             "detail": f"{valid}/{total} generations parsed with motion"}]
    if len(gen_clips) >= 2:
        gen_feats = motion_feature_set(gen_clips, tokenizers.body)
        gt_feats = motion_feature_set(gt_clips, tokenizers.body)
        rows.append({"metric": "fid", "value": round(fid(gen_feats, gt_feats), 4),
                     "detail": gen_feats.extractor_id})
        pairs = max(1, len(gen_clips) // 2)
        rows.append({"metric": "diversity",
                     "value": round(diversity(gen_feats, pairs, seed), 4),
                     "detail": f"{pairs} pairs"})
    if pa_errors:
        rows.append({"metric": "pa_mpjpe_mm",
                     "value": round(float(np.mean(pa_errors)), 3)})
        rows.append({"metric": "angle_error_rad",
                     "value": round(float(np.mean(ang_errors)), 4)})
    if vc_scores:
        rows.append({"metric": "vc_similarity",
                     "value": round(float(np.mean(vc_scores)), 4)})
    return rows


def _crop(clip, frames: int):
    from ..motion.clip import MotionClip

    return MotionClip(fps=clip.fps, body_rot=clip.body_rot[:frames],
                      hand_rot=clip.hand_rot[:frames],
                      root_transl=clip.root_transl[:frames])
