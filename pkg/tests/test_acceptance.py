"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one `ACCEPTANCE PASS|FAIL <criterion>` line. The pipeline
criterion builds real artifacts with the CLI and later criteria reuse them.
Run with `pytest tests/test_acceptance.py -v -s`.
"""

import contextlib
import json
import math
import socket
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import torch
from click.testing import CliRunner

from motionchat.cli import main as cli_main

pytestmark = pytest.mark.acceptance


@contextlib.contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL {name}", flush=True)
        raise
    print(f"ACCEPTANCE PASS {name}", flush=True)


def run_cli(args):
    result = CliRunner().invoke(cli_main, args, catch_exceptions=False)
    assert result.exit_code == 0, f"{args}: {result.output}"
    return result.output


# --------------------------------------------------------------------------
# quantization / vq loss / gradients
# --------------------------------------------------------------------------

def test_quantization_oracle():
    from motionchat.tokenizer import Codebook, quantize

    from .test_quantize import brute_force_nn

    with criterion("quantize matches exhaustive nearest neighbor on 10,000 "
                   "random cases (exact, < 10 s)"):
        rng = np.random.default_rng(0)
        t0 = time.monotonic()
        checked = 0
        for block in range(20):
            k = int(rng.integers(4, 48))
            d = int(rng.integers(1, 9))
            book = Codebook(entries=rng.standard_normal((k, d)))
            for _ in range(500):
                f = rng.standard_normal(d)
                idx, code = quantize(f, book)
                assert idx == brute_force_nn(f, book.entries)
                assert np.array_equal(code, book.entries[idx])
                checked += 1
        elapsed = time.monotonic() - t0
        assert checked == 10_000
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_vq_loss_oracle():
    from motionchat.tokenizer import vq_loss

    from .test_vqvae import scalar_vq_loss, small_cfg

    with criterion("Eq-2-style vq loss matches scalar recomputation within "
                   "1e-10 on 100 random tensors"):
        rng = np.random.default_rng(1)
        for _ in range(100):
            shape = (int(rng.integers(1, 4)), int(rng.integers(2, 6)),
                     int(rng.integers(1, 5)))
            eshape = (int(rng.integers(1, 4)), int(rng.integers(1, 5)))
            lam = rng.uniform(0, 2, 4)
            cfg = small_cfg(lambda_r=lam[0], lambda_e=lam[1], lambda_c=lam[2],
                            lambda_v=lam[3])
            x, r = rng.standard_normal(shape), rng.standard_normal(shape)
            e, c = rng.standard_normal(eshape), rng.standard_normal(eshape)
            total, _ = vq_loss(torch.from_numpy(x), torch.from_numpy(r),
                               torch.from_numpy(e), torch.from_numpy(c), cfg)
            assert abs(float(total) - scalar_vq_loss(x, r, e, c, *lam)) < 1e-10


def test_gradient_checks():
    from motionchat.lm import CausalTransformer, TransformerConfig, masked_loss
    from motionchat.tokenizer import VqvaeConfig, vq_loss
    from motionchat.tokenizer.vqvae import TransformVqvae

    t0 = time.monotonic()
    with criterion("transformer loss gradient matches central finite "
                   "differences (float64, rel err < 1e-4)"):
        model = CausalTransformer(TransformerConfig(
            vocab_size=16, layers=2, heads=2, model_dim=16, ff_dim=32,
            max_context=32, seed=0)).double()
        tokens = torch.tensor([[1, 4, 2, 7, 3, 9, 5, 0]], dtype=torch.long)
        mask = torch.tensor([[True] * 7 + [False]])
        loss = masked_loss(model, tokens, mask)
        model.zero_grad()
        loss.backward()
        rng = np.random.default_rng(0)
        params = [p for _, p in model.named_parameters()]
        eps, worst, checked = 1e-5, 0.0, 0
        while checked < 60:
            p = params[int(rng.integers(len(params)))]
            flat = p.detach().reshape(-1)
            i = int(rng.integers(flat.numel()))
            if abs(float(p.grad.reshape(-1)[i])) < 1e-5:
                continue
            checked += 1
            orig = float(flat[i])
            with torch.no_grad():
                flat[i] = orig + eps
                hi = float(masked_loss(model, tokens, mask))
                flat[i] = orig - eps
                lo = float(masked_loss(model, tokens, mask))
                flat[i] = orig
            numeric = (hi - lo) / (2 * eps)
            analytic = float(p.grad.reshape(-1)[i])
            worst = max(worst, abs(numeric - analytic)
                        / max(abs(numeric), abs(analytic), 1e-8))
        assert worst < 1e-4, f"worst rel err {worst:.2e}"

    with criterion("vq-vae loss gradient matches central finite differences "
                   "of the frozen-assignment surrogate (float64, rel err "
                   "< 1e-4)"):
        cfg = VqvaeConfig(part="transform", in_dim=4, codebook_size=8,
                          code_dim=3, width=8)
        model = TransformVqvae(cfg).double()
        gen = torch.Generator().manual_seed(0)
        x = torch.randn(5, 4, dtype=torch.float64)
        model.quantizer.init_from(torch.randn(20, 3, dtype=torch.float64,
                                              generator=gen), gen)

        # analytic gradients of the production loss (straight-through)
        recon, z_e, code, _ = model(x)
        total, _ = vq_loss(x.unsqueeze(1), recon.unsqueeze(1),
                           z_e.unsqueeze(1), code.unsqueeze(1), cfg)
        model.zero_grad()
        total.backward()

        # the straight-through estimator defines the gradient of this
        # surrogate: assignment and the copied-through offset frozen at the
        # evaluation point, stop-gradient terms as constants
        z_e0 = z_e.detach().clone()
        code0 = code.detach().clone()
        offset = code0 - z_e0
        l_e_const = float(torch.mean((z_e0 - code0) ** 2))

        def surrogate():
            z = model.encoder(x)
            recon_s = model.decoder(z + offset)
            l_r = torch.mean((recon_s - x) ** 2)
            l_c = torch.mean((z - code0) ** 2)
            return float(cfg.lambda_r * l_r + cfg.lambda_e * l_e_const
                         + cfg.lambda_c * l_c)

        assert abs(surrogate() - float(total)) < 1e-12  # same value at theta0

        rng = np.random.default_rng(1)
        params = [p for p in model.parameters() if p.requires_grad]
        eps, worst, checked, attempts = 1e-6, 0.0, 0, 0
        while checked < 40 and attempts < 400:
            attempts += 1
            p = params[int(rng.integers(len(params)))]
            flat = p.detach().reshape(-1)
            i = int(rng.integers(flat.numel()))
            if p.grad is None or abs(float(p.grad.reshape(-1)[i])) < 1e-5:
                continue
            checked += 1
            orig = float(flat[i])
            with torch.no_grad():
                flat[i] = orig + eps
                hi = surrogate()
                flat[i] = orig - eps
                lo = surrogate()
                flat[i] = orig
            numeric = (hi - lo) / (2 * eps)
            analytic = float(p.grad.reshape(-1)[i])
            worst = max(worst, abs(numeric - analytic)
                        / max(abs(numeric), abs(analytic), 1e-8))
        assert checked >= 20
        assert worst < 1e-4, f"worst rel err {worst:.2e}"
    assert time.monotonic() - t0 < 120, "gradient checks exceeded 2 minutes"


# --------------------------------------------------------------------------
# template codec and supervision mask
# --------------------------------------------------------------------------

def test_template_codec_fuzz():
    from motionchat.errors import ParseError
    from motionchat.template import parse_interaction, render_interaction

    from .test_template import LAYOUT, random_conversation

    with criterion("10,000 randomized conversations round-trip render->parse; "
                   "every malformed mutation yields a located ParseError "
                   "(< 1 min)"):
        rng = np.random.default_rng(2)
        t0 = time.monotonic()
        for i in range(10_000):
            conv = random_conversation(rng, max_turns=4)
            tokens = render_interaction(conv, LAYOUT)
            assert parse_interaction(tokens, LAYOUT) == conv
            if not conv.turns:
                continue
            mutated = list(tokens)
            mode = i % 3
            if mode == 0:
                mutated[mutated.index(LAYOUT.special("SOM"))] = \
                    LAYOUT.special("EOS")
            elif mode == 1:
                mutated[mutated.index(LAYOUT.special("ROLE_USER"))] = \
                    LAYOUT.speech_token(0)
            else:
                mutated = mutated[:mutated.index(LAYOUT.special("EOT"))]
            try:
                parse_interaction(mutated, LAYOUT)
                raise AssertionError("mutation parsed cleanly")
            except ParseError as e:
                assert isinstance(e.position, int)
        elapsed = time.monotonic() - t0
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_supervision_mask_audit():
    from motionchat.lm import CausalTransformer, TransformerConfig
    from motionchat.template import render_interaction, supervision_mask

    from .test_template import LAYOUT, random_conversation

    with criterion("mask-true positions equal the independently enumerated "
                   "character-block prediction positions on 1,000 "
                   "conversations"):
        rng = np.random.default_rng(3)
        role_char = LAYOUT.special("ROLE_CHAR")
        eot = LAYOUT.special("EOT")
        for _ in range(1_000):
            conv = random_conversation(rng, max_turns=5)
            tokens = render_interaction(conv, LAYOUT)
            mask = supervision_mask(conv, LAYOUT)
            expected = [False] * len(tokens)
            i = 0
            while i < len(tokens):
                if tokens[i] == role_char:
                    j = tokens.index(eot, i)
                    for p in range(i, j):
                        expected[p] = True
                    i = j
                i += 1
            assert mask == expected

    with criterion("zero gradient at mask-false logits on a toy model"):
        model = CausalTransformer(TransformerConfig(
            vocab_size=LAYOUT.vocab_size, layers=1, heads=2, model_dim=16,
            ff_dim=32, max_context=512, seed=0)).double()
        rng = np.random.default_rng(4)
        conv = random_conversation(rng, max_turns=3)
        while not any(t.role == "character" for t in conv.turns):
            conv = random_conversation(rng, max_turns=3)
        tokens = render_interaction(conv, LAYOUT)
        mask = supervision_mask(conv, LAYOUT)
        t = torch.tensor([tokens], dtype=torch.long)
        m = torch.tensor([mask])
        logits = model(t)
        logits.retain_grad()
        pred_pos = m[:, :-1]
        sel = logits[:, :-1][pred_pos]
        tgt = t[:, 1:][pred_pos]
        loss = torch.nn.functional.cross_entropy(sel, tgt)
        loss.backward()
        grad = logits.grad[0]
        for p in range(len(tokens)):
            if not mask[p]:
                assert torch.all(grad[p] == 0), f"gradient at mask-false {p}"
            else:
                assert torch.any(grad[p] != 0)


# --------------------------------------------------------------------------
# metric oracles
# --------------------------------------------------------------------------

def test_metric_oracles():
    from motionchat.metrics import FeatureSet, angle_error, fid, pa_mpjpe
    from motionchat.motion import MotionClip, rotmat_to_cont6d

    from .conftest import sine_clips, small_skeleton
    from .test_rotation import random_rotation

    rng = np.random.default_rng(5)
    with criterion("fid(a, a) = 0 within 1e-6"):
        x = rng.standard_normal((64, 8))
        a = FeatureSet(features=x, extractor_id="acc")
        assert fid(a, FeatureSet(features=x.copy(), extractor_id="acc")) <= 1e-6

    with criterion("1-dim FID matches the scalar closed form within 1e-10"):
        x = rng.standard_normal((40, 1)) * 1.7 + 0.3
        y = rng.standard_normal((50, 1)) * 0.6 - 1.1
        expected = ((x.mean() - y.mean()) ** 2
                    + (x.std(ddof=1) - y.std(ddof=1)) ** 2)
        got = fid(FeatureSet(features=x, extractor_id="acc"),
                  FeatureSet(features=y, extractor_id="acc"))
        assert abs(got - expected) < 1e-10

    with criterion("Gaussian mean-shift FID matches ||dmu||^2 within 5% at "
                   "N=10,000"):
        d = 8
        shift = np.full(d, 0.8)
        a = FeatureSet(features=rng.standard_normal((10_000, d)),
                       extractor_id="acc")
        b = FeatureSet(features=rng.standard_normal((10_000, d)) + shift,
                       extractor_id="acc")
        expected = float(np.sum(shift ** 2))
        assert abs(fid(a, b) - expected) / expected < 0.05

    with criterion("pa_mpjpe of a rigidly transformed copy < 1e-5 mm"):
        from motionchat.motion import cont6d_to_rotmat

        sk = small_skeleton()
        clip = sine_clips(1, seed=11, frames=6)[0]
        Q = random_rotation(rng)
        moved = MotionClip(fps=clip.fps, body_rot=clip.body_rot.copy(),
                           hand_rot=clip.hand_rot.copy(),
                           root_transl=(clip.root_transl @ Q.T
                                        + np.array([0.4, -0.2, 1.0])
                                        ).astype(np.float32))
        root = cont6d_to_rotmat(clip.body_rot[:, 0])
        moved.body_rot[:, 0] = rotmat_to_cont6d(Q @ root).astype(np.float32)
        assert pa_mpjpe(moved, clip, sk) < 1e-5

    with criterion("angle_error matches the quaternion oracle within 1e-6"):
        from scipy.spatial.transform import Rotation

        from motionchat.motion import cont6d_to_rotmat

        a = sine_clips(1, seed=12, frames=5)[0]
        b = sine_clips(1, seed=13, frames=5)[0]
        got = angle_error(a, b)
        ra = cont6d_to_rotmat(a.all_rotations()).reshape(-1, 3, 3)
        rb = cont6d_to_rotmat(b.all_rotations()).reshape(-1, 3, 3)
        oracle = np.mean([
            2 * np.arccos(np.clip(abs(np.dot(
                Rotation.from_matrix(Ra).as_quat(),
                Rotation.from_matrix(Rb).as_quat())), -1, 1))
            for Ra, Rb in zip(ra, rb)])
        assert abs(got - float(oracle)) < 1e-6


def test_stage2_mixer_ratio(mini):
    from motionchat.trainer import FamilyMixer

    from .test_trainer import task_items_for

    with criterion("stage-2 mixer: motion-family fraction within [0.38, 0.42] "
                   "over 10,000 batch draws"):
        mixer = FamilyMixer(task_items_for(mini), seed=0, motion_ratio=0.4)
        draws = [mixer.draw(1)[0] for _ in range(10_000)]
        frac = draws.count("motion") / len(draws)
        assert 0.38 <= frac <= 0.42, f"fraction {frac:.4f}"


# --------------------------------------------------------------------------
# retrieval
# --------------------------------------------------------------------------

def test_retrieval_oracles():
    from motionchat.fixtures import fixture_motion_entries
    from motionchat.synthesis import (EmbeddingIndex, HashedTfidfEmbedder,
                                      MockTextGen, build_index,
                                      consolidate_captions, retrieve_motion)

    from .conftest import small_skeleton

    with criterion("every fixture db entry is its own top-1 under its "
                   "consolidated caption"):
        entries = fixture_motion_entries(60, small_skeleton(), frames=8)
        textgen = MockTextGen(seed=0)
        for e in entries:
            e.consolidated_caption = consolidate_captions(e, textgen)
        embedder = HashedTfidfEmbedder().fit(
            [e.consolidated_caption for e in entries])
        index = build_index(entries, embedder)
        for e in entries:
            top = retrieve_motion(e.consolidated_caption, index, 1, embedder)
            assert top[0][0] == e.motion_id

    with criterion("top-k matches the brute-force scan exactly on a "
                   "1,000-entry index"):
        rng = np.random.default_rng(6)
        words = ["wave", "bow", "clap", "jump", "spin", "kick", "nod", "walk",
                 "left", "right", "slow", "fast", "twice", "high", "low"]
        captions = {}
        for i in range(1_000):
            text = " ".join(rng.choice(words, size=6)) + f" take {i}"
            captions[f"m{i:04d}"] = text
        embedder = HashedTfidfEmbedder().fit(list(captions.values()))
        index = EmbeddingIndex(dimension=embedder.dim)
        for mid, text in captions.items():
            index.add(mid, embedder.embed(text))
        for q in ["wave left slow", "jump twice high", "bow right",
                  "clap fast low", "spin nod walk"]:
            got = retrieve_motion(q, index, 5, embedder)
            qv = embedder.embed(q)
            brute = sorted(((mid, float(qv @ v))
                            for mid, v in index.entries.items()),
                           key=lambda p: (-p[1], p[0]))[:5]
            assert got == brute


# --------------------------------------------------------------------------
# the fixture pipeline and everything that reuses its artifacts
# --------------------------------------------------------------------------

ACCEPT_PLAN = {
    "seed": 0,
    "model": {"layers": 4, "heads": 4, "model_dim": 128, "ff_dim": 512,
              "max_context": 1024},
    "stage1": {"steps": 200, "batch_size": 16},
    "stage2": {"steps": 1200, "batch_size": 8, "lr": 1e-3, "eval_every": 200},
    "stage3": {"steps": 600, "batch_size": 4, "lr": 5e-4, "eval_every": 100},
}


class Pipeline:
    def __init__(self, root: Path):
        self.root = root
        self.data = root / "data"
        self.ck = root / "checkpoints"
        self.dataset = root / "dataset"
        self.plan_path = root / "plan.json"
        self.elapsed = {}

    def run(self):
        self.plan_path.write_text(json.dumps(ACCEPT_PLAN))
        steps = [
            ("fixtures", ["make-fixtures", "--out", str(self.data),
                          "--clips", "220"]),
            ("stage1", ["train-tokenizer", "--data", str(self.data),
                        "--checkpoints", str(self.ck),
                        "--plan", str(self.plan_path)]),
            ("synth", ["synth-data", "--data", str(self.data),
                       "--checkpoints", str(self.ck),
                       "--out", str(self.dataset), "--items", "120",
                       "--rounds", "2"]),
            ("stage2", ["pretrain", "--data", str(self.data),
                        "--checkpoints", str(self.ck),
                        "--plan", str(self.plan_path)]),
            ("stage3", ["finetune", "--data", str(self.data),
                        "--checkpoints", str(self.ck),
                        "--dataset", str(self.dataset),
                        "--plan", str(self.plan_path)]),
            ("stage3_nopre", ["finetune", "--data", str(self.data),
                              "--checkpoints", str(self.ck),
                              "--dataset", str(self.dataset),
                              "--plan", str(self.plan_path), "--no-pretrain",
                              "--out-name", "nopretrain"]),
            ("evaluate", ["evaluate", "--data", str(self.data),
                          "--checkpoints", str(self.ck),
                          "--dataset", str(self.dataset),
                          "--out", str(self.root / "report"),
                          "--samples", "8"]),
        ]
        total0 = time.monotonic()
        for name, args in steps:
            t0 = time.monotonic()
            run_cli(args)
            self.elapsed[name] = time.monotonic() - t0
            print(f"  pipeline step {name}: {self.elapsed[name]:.1f}s",
                  flush=True)
        self.elapsed["total"] = time.monotonic() - total0

    def held_out_loss(self, arm: str) -> float:
        from motionchat.checkpoint import load_checkpoint

        path = (self.ck / "stage3.ckpt" if arm == "with"
                else self.ck / "nopretrain" / "stage3.ckpt")
        return float(load_checkpoint(path).extra["held_out_loss"])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    p = Pipeline(tmp_path_factory.mktemp("acceptance"))
    p.run()
    return p


def test_fixture_pipeline_directional(pipeline):
    with criterion("fixture pipeline (>=200 clips, >=100 dialogues) completes "
                   "end to end in < 60 min"):
        from motionchat.motion import load_motion_db
        from motionchat.template import load_conversations

        assert len(load_motion_db(pipeline.data / "motion.mdb")) >= 200
        assert len(load_conversations(
            pipeline.dataset / "dialogues.txt")) >= 100
        assert (pipeline.root / "report.txt").exists()
        assert pipeline.elapsed["total"] < 3600, \
            f"pipeline took {pipeline.elapsed['total']:.0f}s"

    with criterion("stage-3 held-out loss with stage-2 pretraining < without "
                   "pretraining after equal budget"):
        with_pre = pipeline.held_out_loss("with")
        without = pipeline.held_out_loss("without")
        print(f"  held-out loss: with pretrain {with_pre:.4f} vs "
              f"without {without:.4f}", flush=True)
        assert with_pre < without


def test_overfit_sanity(pipeline):
    from motionchat.checkpoint import load_checkpoint
    from motionchat.lm import (CausalTransformer, make_optimizer,
                               masked_accuracy, pad_batch, set_cosine_lr,
                               train_step)
    from motionchat.template import VocabLayout, load_conversations
    from motionchat.trainer import render_dialogues

    with criterion("stage-3 model reaches >= 90% next-token accuracy on 50 "
                   "training dialogues within 2,000 steps"):
        torch.set_num_threads(2)
        layout = VocabLayout()
        dialogues = load_conversations(pipeline.dataset / "dialogues.txt")[:50]
        rendered, _ = render_dialogues(dialogues, layout, 1024)
        assert len(rendered) == 50
        ck = load_checkpoint(pipeline.ck / "stage2.ckpt", expect_kind="lm")
        model = CausalTransformer.from_state(ck.config, ck.tensors)
        model.train()
        opt = make_optimizer(model, 1e-3)
        pad = layout.special("PAD")
        gen = np.random.default_rng(0)
        acc = 0.0
        budget = 2_000
        for step in range(budget):
            set_cosine_lr(opt, 1e-3, step, budget)
            picks = gen.integers(0, len(rendered), 4)
            batch = [rendered[int(i)] for i in picks]
            tokens, mask = pad_batch([b[0] for b in batch],
                                     [b[1] for b in batch], pad)
            train_step(model, tokens, mask, opt)
            if step % 100 == 99:
                accs, weights = [], []
                for i in range(0, len(rendered), 8):
                    chunk = rendered[i:i + 8]
                    t, m = pad_batch([c[0] for c in chunk],
                                     [c[1] for c in chunk], pad)
                    accs.append(masked_accuracy(model, t, m))
                    weights.append(int(m.sum()))
                acc = float(np.average(accs, weights=weights))
                print(f"  overfit step {step + 1}: accuracy {acc:.3f}",
                      flush=True)
                if acc >= 0.90:
                    break
        assert acc >= 0.90, f"accuracy {acc:.3f} after {budget} steps"


def test_latency_ordering(pipeline):
    from motionchat.metrics import latency_harness
    from motionchat.server import InteractionService, build_app, load_assets

    from .serving import ServerThread

    with criterion("mean full-response latency end_to_end < modular over 50 "
                   "scripted turns (p95 reported; speech_only for reference)"):
        torch.set_num_threads(2)
        assets = load_assets(pipeline.data, pipeline.ck)
        service = InteractionService(assets,
                                     media_dir=pipeline.root / "media")
        from dataclasses import replace

        service.default_sampler = replace(service.default_sampler,
                                          temperature=0.7, top_k=20,
                                          max_new_tokens=160, seed=5)
        app = build_app(service)
        profile = next(iter(assets.profiles))
        script = [{"speech": {"text": "hello there"},
                   "motion": {"motion_id": assets.entries[0].motion_id}}]
        summaries = {}
        with ServerThread(app) as server:
            for method in ("end_to_end", "modular", "speech_only"):
                record = latency_harness(server.base_url, script, method,
                                         trials=50, profile_id=profile)
                summaries[method] = record.summary()
                s = summaries[method]
                print(f"  {method}: mean_full={s['full_response']['mean']:.3f}s "
                      f"p95_full={s['full_response']['p95']:.3f}s "
                      f"mean_first={s['first_token']['mean']:.3f}s",
                      flush=True)
        assert (summaries["end_to_end"]["full_response"]["mean"]
                < summaries["modular"]["full_response"]["mean"])
        assert summaries["end_to_end"]["full_response"]["p95"] > 0
        assert summaries["speech_only"]["turns"] == 50


def test_synth_data_offline_determinism(pipeline):
    with criterion("synth-data with mock clients and a fixed seed is bitwise "
                   "identical across runs, with zero network activity"):
        out_a = pipeline.root / "det_a"
        out_b = pipeline.root / "det_b"
        real_socket = socket.socket

        class NetworkGuard(socket.socket):
            def connect(self, *a, **k):
                raise AssertionError(f"network activity during synth-data: {a}")

            def connect_ex(self, *a, **k):
                raise AssertionError(f"network activity during synth-data: {a}")

        socket.socket = NetworkGuard
        try:
            for out in (out_a, out_b):
                run_cli(["synth-data", "--data", str(pipeline.data),
                         "--checkpoints", str(pipeline.ck), "--out", str(out),
                         "--items", "12", "--rounds", "2", "--seed", "9",
                         "--no-update-db"])
        finally:
            socket.socket = real_socket
        files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*")
                         if p.is_file())
        files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*")
                         if p.is_file())
        assert files_a == files_b and files_a
        for rel in files_a:
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), \
                f"{rel} differs between runs"


def test_server_stress(mini, tmp_path):
    import threading

    from .test_server import drain, make_service

    with criterion("64 concurrent sessions x 20 turns: all histories are "
                   "valid conversations; per-session ordering holds"):
        service = make_service(mini, tmp_path / "media", max_new_tokens=8)
        methods = ["speech_only", "end_to_end"]
        sids = [service.create_session(mini.profiles[i % 4].name,
                                       methods[i % 2]) for i in range(64)]
        errors = []

        def worker(sid):
            try:
                for t in range(20):
                    frames = drain(service.post_turn(
                        sid, {"speech": {"text": f"ping {t}"}}))
                    kinds = [e for e, _ in frames]
                    assert kinds[-1] in ("final", "error")
                    assert "error" not in kinds, frames[-1]
            except Exception as e:  # noqa: BLE001
                errors.append((sid, repr(e)))

        threads = [threading.Thread(target=worker, args=(sid,))
                   for sid in sids]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors, errors[:3]
        for sid in sids:
            conv = service.get_history(sid)
            conv.validate()
            assert len(conv.turns) == 40
