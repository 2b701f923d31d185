"""Operator entry point: every pipeline stage and utility as a subcommand.

Exit codes: 0 success, 2 ConfigError, 3 ParseError, 1 any other failure.
Errors print one machine-parseable line `ERROR <Class>: <message>` to stderr.
Logs go to stderr; artifacts only to the paths given on the command line.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
import time
from pathlib import Path

import click

from . import DATA_FORMAT_VERSION, __version__
from .errors import ConfigError, MotionChatError, ParseError

logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                    format="%(levelname)s %(name)s: %(message)s")

EXIT_CODES = {ConfigError: 2, ParseError: 3}


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MotionChatError as e:
            click.echo(f"ERROR {type(e).__name__}: {e}", err=True)
            sys.exit(EXIT_CODES.get(type(e), 1))
        except Exception as e:  # noqa: BLE001 - uniform operator surface
            click.echo(f"ERROR {type(e).__name__}: {e}", err=True)
            sys.exit(1)
    return wrapper


def _check_dir(path: Path, what: str):
    if not path.exists():
        raise ConfigError(f"{what} path does not exist: {path}")


def _load_plan_opt(plan_path, seed):
    from .trainer import StagePlan, load_plan

    plan = load_plan(plan_path) if plan_path else StagePlan()
    if seed is not None:
        plan.seed = seed
    return plan


@click.group()
@click.version_option(version=f"{__version__} (data-format v{DATA_FORMAT_VERSION})",
                      message="%(prog)s %(version)s")
def main():
    """Desk-scale multimodal character chat stack."""


@main.command("make-fixtures")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--clips", default=220, show_default=True)
@click.option("--frames", default=64, show_default=True)
@click.option("--dry-run", is_flag=True)
@cli_errors
def make_fixtures(out, clips, frames, dry_run):
    """Fabricate the synthetic motion/speech/topic corpora."""
    from .fixtures import write_fixture_tree

    if clips < 1:
        raise ConfigError("--clips must be positive")
    if dry_run:
        click.echo(f"would write {clips} clips and corpora to {out}")
        return
    write_fixture_tree(out, n_clips=clips, frames=frames)
    click.echo(f"fixtures written to {out}")


@main.command("train-tokenizer")
@click.option("--data", type=click.Path(path_type=Path), required=True)
@click.option("--checkpoints", type=click.Path(path_type=Path), required=True)
@click.option("--plan", "plan_path", type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None)
@click.option("--dry-run", is_flag=True)
@cli_errors
def train_tokenizer(data, checkpoints, plan_path, seed, dry_run):
    """Stage 1: train and freeze motion tokenizers plus the speech codec."""
    from .checkpoint import save_checkpoint
    from .fixtures import entry_transforms
    from .motion.database import load_motion_db
    from .speech.codec import train_speech_codec
    from .speech.synth import text_to_signal
    from .trainer import run_stage1

    _check_dir(data, "data")
    db_path = data / "motion.mdb"
    if not db_path.exists():
        raise ConfigError(f"missing dataset: {db_path}")
    plan = _load_plan_opt(plan_path, seed)
    if dry_run:
        click.echo("config ok")
        return
    t0 = time.time()
    entries = load_motion_db(db_path)
    rels = entry_transforms(entries)
    path = run_stage1(entries, rels, plan, checkpoints)
    click.echo(f"motion tokenizers -> {path} ({time.time() - t0:.1f}s)")

    profiles = json.loads((data / "profiles.json").read_text())
    sentences = (data / "sentences.txt").read_text().splitlines()
    voices = [p["voice_id"] for p in profiles] + ["user_default"]
    corpus = [text_to_signal(t, v) for v in voices for t in sentences if t]
    codec = train_speech_codec(corpus, seed=plan.seed)
    config, tensors = codec.state()
    codec_path = Path(checkpoints) / "speech_codec.ckpt"
    save_checkpoint(codec_path, "speech-codec", config, tensors)
    click.echo(f"speech codec -> {codec_path}")


def _load_stage_inputs(data, checkpoints):
    from .checkpoint import load_checkpoint
    from .fixtures import entry_transforms
    from .motion.database import load_motion_db
    from .speech.codec import SpeechCodec
    from .tokenizer.vqvae import MotionTokenizerSet

    _check_dir(data, "data")
    _check_dir(Path(checkpoints), "checkpoints")
    entries = load_motion_db(data / "motion.mdb")
    rels = entry_transforms(entries)
    ck = load_checkpoint(Path(checkpoints) / "tokenizers.ckpt",
                         expect_kind="motion-tokenizer")
    tokenizers = MotionTokenizerSet.from_state(ck.config, ck.tensors)
    ck = load_checkpoint(Path(checkpoints) / "speech_codec.ckpt",
                         expect_kind="speech-codec")
    codec = SpeechCodec.from_state(ck.config, ck.tensors)
    return entries, rels, tokenizers, codec


@main.command("synth-data")
@click.option("--data", type=click.Path(path_type=Path), required=True)
@click.option("--checkpoints", type=click.Path(path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--items", default=120, show_default=True)
@click.option("--rounds", default=2, show_default=True)
@click.option("--strategy", default="auto", show_default=True,
              type=click.Choice(["auto", "m1", "m2", "m3"]))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--update-db/--no-update-db", default=True, show_default=True,
              help="write consolidated captions back to the motion db")
@click.option("--dry-run", is_flag=True)
@cli_errors
def synth_data(data, checkpoints, out, items, rounds, strategy, seed, update_db,
               dry_run):
    """Synthesize the multimodal dialogue dataset with offline mock clients."""
    from .motion.database import save_motion_db
    from .synthesis import (HashedTfidfEmbedder, MockTextGen, build_index,
                            consolidate_captions, finalize_dataset,
                            generate_dialogue, ingest_topics)
    from .template.convo import CharacterProfile

    entries, rels, tokenizers, codec = _load_stage_inputs(data, checkpoints)
    topic_files = sorted(Path(data).glob("topics_*.txt"))
    if not topic_files:
        raise ConfigError(f"no topics_*.txt files under {data}")
    if dry_run:
        click.echo("config ok")
        return
    textgen = MockTextGen(seed=seed)
    for e in entries:
        e.consolidated_caption = consolidate_captions(e, textgen)
    if update_db:
        save_motion_db(entries, data / "motion.mdb")
    embedder = HashedTfidfEmbedder().fit(
        [e.consolidated_caption for e in entries])
    index = build_index(entries, embedder)
    topics = ingest_topics(topic_files)
    profiles = [CharacterProfile(name=p["name"], description=p["description"],
                                 voice_id=p["voice_id"],
                                 motion_tags=p.get("motion_tags", []))
                for p in json.loads((data / "profiles.json").read_text())]
    task_types = ["common", "motion_understanding", "instruction_following",
                  "imitation"]
    dialogue_items = []
    for i in range(items):
        dialogue_items.append(generate_dialogue(
            profiles[i % len(profiles)], topics[i % len(topics)],
            task_types[i % len(task_types)], strategy, textgen, entries, index,
            embedder, rounds_target=rounds, seed=seed + i))
    manifest = finalize_dataset(dialogue_items, entries, rels, tokenizers,
                                codec, out)
    click.echo(f"dataset -> {out} ({len(manifest['items'])} items, "
               f"{manifest['written']} files written, "
               f"{manifest['skipped']} unchanged)")


@main.command("pretrain")
@click.option("--data", type=click.Path(path_type=Path), required=True)
@click.option("--checkpoints", type=click.Path(path_type=Path), required=True)
@click.option("--plan", "plan_path", type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None)
@click.option("--dry-run", is_flag=True)
@cli_errors
def pretrain(data, checkpoints, plan_path, seed, dry_run):
    """Stage 2: multi-task pretraining for modality alignment."""
    from .trainer import (build_motion_task_items, build_speech_task_items,
                          encode_entries, run_stage2)

    plan = _load_plan_opt(plan_path, seed)
    entries, rels, tokenizers, codec = _load_stage_inputs(data, checkpoints)
    sentences = [s for s in (data / "sentences.txt").read_text().splitlines() if s]
    s2s_pairs = [tuple(line.split("\t", 1))
                 for line in (data / "s2s.txt").read_text().splitlines() if line]
    profiles = json.loads((data / "profiles.json").read_text())
    voices = [p["voice_id"] for p in profiles] + ["user_default"]
    if dry_run:
        click.echo("config ok")
        return
    t0 = time.time()
    tokens_by_id = encode_entries(entries, tokenizers, rels)
    task_items = build_motion_task_items(entries, tokens_by_id)
    task_items.update(build_speech_task_items(sentences, s2s_pairs, voices, codec))
    path = run_stage2(task_items, plan, checkpoints)
    click.echo(f"stage2 -> {path} ({time.time() - t0:.1f}s)")


@main.command("finetune")
@click.option("--data", type=click.Path(path_type=Path), required=True)
@click.option("--checkpoints", type=click.Path(path_type=Path), required=True)
@click.option("--dataset", type=click.Path(path_type=Path), required=True)
@click.option("--plan", "plan_path", type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None)
@click.option("--no-pretrain", is_flag=True,
              help="skip the stage-2 initialization (ablation arm)")
@click.option("--lora", is_flag=True, help="LoRA adapters instead of full tuning")
@click.option("--out-name", default=None, help="checkpoint directory suffix")
@click.option("--dry-run", is_flag=True)
@cli_errors
def finetune(data, checkpoints, dataset, plan_path, seed, no_pretrain, lora,
             out_name, dry_run):
    """Stage 3: instruction tuning on multi-round dialogues."""
    import dataclasses

    from .template.interchange import load_conversations
    from .trainer import run_stage3

    plan = _load_plan_opt(plan_path, seed)
    if lora:
        plan = dataclasses.replace(
            plan, stage3=dataclasses.replace(plan.stage3, mode="lora"))
    dialogues_path = Path(dataset) / "dialogues.txt"
    if not dialogues_path.exists():
        raise ConfigError(f"missing dialogue dataset: {dialogues_path}")
    init = None
    if not no_pretrain:
        init = Path(checkpoints) / "stage2.ckpt"
        if not init.exists():
            raise ConfigError(f"missing stage-2 checkpoint: {init} "
                              f"(use --no-pretrain for the ablation arm)")
    if dry_run:
        click.echo("config ok")
        return
    t0 = time.time()
    dialogues = load_conversations(dialogues_path)
    out_dir = Path(checkpoints) if out_name is None else Path(checkpoints) / out_name
    result = run_stage3(dialogues, plan, out_dir, init_checkpoint=init)
    click.echo(f"stage3 -> {result['checkpoint']} ({time.time() - t0:.1f}s)")
    click.echo(f"train_loss={result['train_loss']:.4f} "
               f"held_out_loss={result['held_out_loss']:.4f} "
               f"train_accuracy={result['train_accuracy']:.4f}")


@main.command("evaluate")
@click.option("--data", type=click.Path(path_type=Path))
@click.option("--checkpoints", type=click.Path(path_type=Path))
@click.option("--dataset", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=Path("report"))
@click.option("--samples", default=16, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lm-checkpoint", type=click.Path(path_type=Path), default=None)
@click.option("--self-test", is_flag=True, help="run the metric oracle suite")
@cli_errors
def evaluate(data, checkpoints, dataset, out, samples, seed, lm_checkpoint,
             self_test):
    """Quantitative metrics on held-out dialogues (or --self-test)."""
    if self_test:
        _metric_self_test()
        click.echo("metric self-test passed")
        return
    if not (data and checkpoints and dataset):
        raise ConfigError("--data, --checkpoints, and --dataset are required")
    from .metrics.report import write_report
    from .metrics.suite import run_evaluation
    from .server.assets import load_assets
    from .template.interchange import load_conversations
    from .trainer import split_dataset

    assets = load_assets(data, checkpoints,
                         lm_checkpoint=lm_checkpoint)
    dialogues = load_conversations(Path(dataset) / "dialogues.txt")
    _, test_idx = split_dataset(len(dialogues), (9, 1), seed)
    held_out = [dialogues[i] for i in test_idx] or dialogues
    rows = run_evaluation(assets.model, assets.layout, assets.tokenizers,
                          assets.codec, assets.skeleton, assets.prompts,
                          held_out, n_samples=samples, seed=seed)
    write_report(rows, out, title="held-out evaluation")
    for r in rows:
        click.echo(f"{r['metric']}: {r['value']}")


def _metric_self_test():
    import numpy as np

    from .metrics import FeatureSet, diversity, fid

    rng = np.random.default_rng(0)
    x = rng.standard_normal((64, 8))
    a = FeatureSet(features=x, extractor_id="selftest")
    if fid(a, FeatureSet(features=x.copy(), extractor_id="selftest")) > 1e-6:
        raise AssertionError("fid(a, a) != 0")
    mu1, s1 = 1.0, 2.0
    mu2, s2 = -0.5, 0.5
    one = rng.standard_normal((200, 1)) * s1 + mu1
    two = rng.standard_normal((200, 1)) * s2 + mu2
    got = fid(FeatureSet(features=one, extractor_id="s"),
              FeatureSet(features=two, extractor_id="s"))
    expect = (one.mean() - two.mean()) ** 2 + (one.std(ddof=1) - two.std(ddof=1)) ** 2
    if abs(got - expect) > 1e-10:
        raise AssertionError("scalar FID mismatch")
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    if diversity(FeatureSet(features=pts, extractor_id="s"), 1, 0) != 2.0:
        raise AssertionError("diversity two-point case failed")


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(path_type=Path))
@click.option("--data", type=click.Path(path_type=Path))
@click.option("--checkpoints", type=click.Path(path_type=Path))
@click.option("--lm-checkpoint", type=click.Path(path_type=Path), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--dry-run", is_flag=True)
@cli_errors
def serve(config_path, data, checkpoints, lm_checkpoint, host, port, dry_run):
    """Run the streaming interaction server."""
    import uvicorn

    from .server import InteractionService, ServerConfig, build_app, load_assets

    cfg = ServerConfig.load(config_path)
    if data:
        cfg.data_dir = str(data)
    if checkpoints:
        cfg.checkpoint_dir = str(checkpoints)
    if lm_checkpoint:
        cfg.lm_checkpoint = str(lm_checkpoint)
    if host:
        cfg.host = host
    if port:
        cfg.port = port
    assets = load_assets(cfg.data_dir, cfg.checkpoint_dir,
                         cfg.lm_checkpoint or None)
    if dry_run:
        click.echo("config ok")
        return
    media = cfg.media_dir or str(Path(cfg.checkpoint_dir) / "media")
    service = InteractionService(assets, media_dir=media)
    app = build_app(service)
    click.echo(f"serving on http://{cfg.host}:{cfg.port}", err=True)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")


@main.command("chat")
@click.option("--url", required=True, help="server base URL")
@click.option("--profile", required=True)
@click.option("--method", default="end_to_end", show_default=True)
@cli_errors
def chat(url, profile, method):
    """Terminal chat client against a running server."""
    import httpx

    from .metrics.latency import iter_sse

    client = httpx.Client(timeout=120.0)
    resp = client.post(f"{url}/sessions", json={"profile_id": profile,
                                                "method": method})
    resp.raise_for_status()
    sid = resp.json()["session_id"]
    click.echo(f"session {sid} with {profile} ({method}); empty line quits",
               err=True)
    while True:
        try:
            line = input("you> ")
        except EOFError:
            break
        if not line.strip():
            break
        with client.stream("POST", f"{url}/sessions/{sid}/turn",
                           json={"speech": {"text": line}}) as stream:
            stream.raise_for_status()
            tokens = 0
            for event, data in iter_sse(stream):
                if event in ("motion_chunk", "speech_chunk"):
                    tokens += len(data.get("tokens", []))
                elif event == "final":
                    t = data["timings"]
                    text = data["turn"].get("text") or "(multimodal response)"
                    click.echo(f"char> {text}")
                    click.echo(
                        f"      [{tokens} tokens, first "
                        f"{t['first_token_ms']:.0f} ms, full {t['full_ms']:.0f} ms,"
                        f" wav {data.get('wav')}]", err=True)
                elif event == "error":
                    click.echo(f"ERROR {data['error']}: {data['message']}",
                               err=True)
    client.delete(f"{url}/sessions/{sid}")


@main.command("bench-latency")
@click.option("--url", required=True)
@click.option("--profile", required=True)
@click.option("--methods", default="end_to_end,modular,speech_only",
              show_default=True)
@click.option("--trials", default=10, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@cli_errors
def bench_latency(url, profile, methods, trials, out):
    """Latency comparison across serving methods."""
    from .metrics.latency import latency_harness
    from .metrics.report import write_report

    script = [{"speech": {"text": "hello there"}}]
    rows = []
    for method in methods.split(","):
        record = latency_harness(url, script, method.strip(), trials,
                                 profile_id=profile)
        s = record.summary()
        click.echo(f"{method}: mean_full={s['full_response']['mean']:.3f}s "
                   f"p95={s['full_response']['p95']:.3f}s "
                   f"first={s['first_token']['mean']:.3f}s")
        rows.append({"metric": f"{method}.full_mean_s",
                     "value": round(s["full_response"]["mean"], 4)})
        rows.append({"metric": f"{method}.full_p95_s",
                     "value": round(s["full_response"]["p95"], 4)})
        rows.append({"metric": f"{method}.first_mean_s",
                     "value": round(s["first_token"]["mean"], 4)})
    if out:
        write_report(rows, out, title="latency")


if __name__ == "__main__":
    main()
