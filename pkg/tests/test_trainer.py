import numpy as np
import pytest
import torch

from motionchat.errors import ConfigError
from motionchat.trainer import (FamilyMixer, StagePlan, audit_mask,
                                build_motion_task_items,
                                build_speech_task_items, encode_entries,
                                load_plan, render_dialogues, run_stage2,
                                run_stage3, save_plan, split_dataset)


def task_items_for(mini):
    tokens_by_id = encode_entries(mini.entries, mini.tokenizers, mini.rels)
    items = build_motion_task_items(mini.entries, tokens_by_id)
    items.update(build_speech_task_items(mini.sentences[:12], mini.s2s_pairs[:6],
                                         mini.voices, mini.codec))
    return items


def test_mixer_family_fraction(mini):
    items = task_items_for(mini)
    mixer = FamilyMixer(items, seed=0, motion_ratio=0.4)
    draws = [mixer.draw(1)[0] for _ in range(10_000)]
    frac = draws.count("motion") / len(draws)
    assert 0.38 <= frac <= 0.42


def test_mixer_uniform_within_family(mini):
    items = task_items_for(mini)
    mixer = FamilyMixer(items, seed=1)
    tasks = [mixer.draw(1)[1][0].task_id for _ in range(6000)]
    for family in (("t2m", "m2t", "interx"), ("tts", "asr", "s2s")):
        counts = [tasks.count(t) for t in family]
        total = sum(counts)
        for c in counts:
            assert abs(c / total - 1 / 3) < 0.05


def test_mixer_speech_disabled(mini):
    items = task_items_for(mini)
    mixer = FamilyMixer(items, seed=2, disabled_tasks=["tts", "asr", "s2s"])
    assert all(mixer.draw(2)[0] == "motion" for _ in range(200))


def test_mixer_missing_task_requires_explicit_disable(mini):
    items = task_items_for(mini)
    items.pop("s2s")
    with pytest.raises(ConfigError):
        FamilyMixer(items, seed=0)
    FamilyMixer(items, seed=0, disabled_tasks=["s2s"])  # explicit is fine


def test_split_dataset_stable_and_disjoint():
    train, test = split_dataset(100, (9, 1), seed=42)
    assert len(train) == 90 and len(test) == 10
    assert set(train).isdisjoint(test)
    assert set(train) | set(test) == set(range(100))
    train2, test2 = split_dataset(100, (9, 1), seed=42)
    assert train == train2 and test == test2
    train3, _ = split_dataset(100, (9, 1), seed=43)
    assert train != train3


def test_plan_round_trip(tmp_path, mini):
    path = tmp_path / "plan.json"
    save_plan(mini.plan, path)
    loaded = load_plan(path)
    assert loaded.to_dict() == mini.plan.to_dict()


def test_plan_invalid(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"stage3\": {\"mode\": \"bogus\"}}")
    with pytest.raises(ConfigError):
        load_plan(path)
    with pytest.raises(ConfigError):
        load_plan(tmp_path / "missing.json")


def test_stage2_runs_and_mixes(mini, tmp_path):
    items = task_items_for(mini)
    path = run_stage2(items, mini.plan, tmp_path)
    assert path.exists()
    log = (tmp_path / "stage2_log.csv").read_text().splitlines()
    assert len(log) == mini.plan.stage2.steps + 1
    assert {"motion", "speech"} <= {line.split(",")[1] for line in log[1:]}


def test_render_dialogues_drops_oversized(mini):
    rendered, skipped = render_dialogues(mini.dialogues, mini.layout,
                                         max_context=10_000)
    assert skipped == 0 and len(rendered) == len(mini.dialogues)
    rendered2, skipped2 = render_dialogues(mini.dialogues, mini.layout,
                                           max_context=120)
    assert skipped2 > 0
    assert len(rendered2) + skipped2 == len(mini.dialogues)


def test_audit_mask_catches_user_supervision(mini):
    from motionchat.template import render_with_spans, supervision_mask

    conv = mini.dialogues[0]
    tokens, _ = render_with_spans(conv, mini.layout)
    mask = supervision_mask(conv, mini.layout)
    audit_mask(tokens, mask, mini.layout)  # clean mask passes
    bad = list(mask)
    bad[2] = True  # inside the system block
    with pytest.raises(AssertionError):
        audit_mask(tokens, bad, mini.layout)


def test_stage3_full_and_lora(mini, tmp_path):
    import dataclasses

    result = run_stage3(mini.dialogues, mini.plan, tmp_path / "full")
    assert result["checkpoint"].exists()
    assert result["n_train"] + result["n_test"] == len(mini.dialogues)
    assert result["held_out_loss"] is not None

    lora_plan = dataclasses.replace(
        mini.plan, stage3=dataclasses.replace(mini.plan.stage3, mode="lora"))
    result2 = run_stage3(mini.dialogues, lora_plan, tmp_path / "lora")
    assert result2["checkpoint"].exists()


def test_stage3_lora_trains_under_2_percent():
    # the desk-default model: rank-8 adapters on q/v are a small fraction
    from motionchat.lm import (CausalTransformer, LoraConfig, lora_attach,
                               lora_parameter_count)

    model = CausalTransformer(StagePlan().transformer_config())
    total = model.parameter_count()
    lora_attach(model, LoraConfig(rank=8))
    assert lora_parameter_count(model) / total < 0.02
    assert model.trainable_parameter_count() == lora_parameter_count(model)


def test_stage3_split_ratio(mini, tmp_path):
    rendered, _ = render_dialogues(mini.dialogues, mini.layout, 768)
    n = len(rendered)
    train, test = split_dataset(n, mini.plan.stage3.split, mini.plan.seed)
    assert len(train) == round(n * 0.9)


def test_stage3_deterministic(mini, tmp_path):
    r1 = run_stage3(mini.dialogues, mini.plan, tmp_path / "a")
    r2 = run_stage3(mini.dialogues, mini.plan, tmp_path / "b")
    assert r1["train_loss"] == r2["train_loss"]
    assert r1["held_out_loss"] == r2["held_out_loss"]
    a = (tmp_path / "a" / "stage3.ckpt").read_bytes()
    b = (tmp_path / "b" / "stage3.ckpt").read_bytes()
    assert a == b


def test_stage2_deterministic(mini, tmp_path):
    items = task_items_for(mini)
    a = run_stage2(items, mini.plan, tmp_path / "a")
    b = run_stage2(items, mini.plan, tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()
