import numpy as np
import pytest

from motionchat.errors import IndexOutOfRange, SignalTooShort
from motionchat.speech import (SAMPLE_RATE, SpeechSignal, VoicePrompt, load_wav,
                               save_wav, text_to_signal, timbre_vector,
                               train_speech_codec, voice_prompt)

VOICES = [f"v{i}" for i in range(6)]
TEXTS = ["hello there", "how are you today", "the weather is nice",
         "tell me a story", "i like moving around", "what do you think",
         "goodbye friend", "see you soon", "let us dance together",
         "please wave back to me"]


@pytest.fixture(scope="session")
def codec():
    corpus = [text_to_signal(t, v) for v in VOICES for t in TEXTS]
    return train_speech_codec(corpus, seed=0)


def cosine(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(a @ b / (na * nb))


def test_synth_deterministic():
    a = text_to_signal("hi", "v1")
    b = text_to_signal("hi", "v1")
    assert np.array_equal(a.samples, b.samples)


def test_synth_voices_differ_spectrally():
    a = timbre_vector(text_to_signal("hi", "v1"))
    b = timbre_vector(text_to_signal("hi", "v2"))
    assert cosine(a, b) < 0.99


def test_synth_empty_text_silence():
    s = text_to_signal("", "v1")
    assert s.duration == pytest.approx(0.1)
    assert np.all(s.samples == 0)


def test_synth_amplitude_bounded():
    for text in TEXTS:
        text_to_signal(text, "v3").validate()


def test_voice_prompt_duration():
    p = voice_prompt("char", "v0", seconds=5.0)
    assert 4.0 <= p.signal.duration <= 6.0
    with pytest.raises(ValueError):
        VoicePrompt("char", text_to_signal("hi", "v0"))


def test_encode_two_seconds_gives_100_tokens_per_layer(codec):
    sig = text_to_signal("x" * 100, "v0")  # 100 chars * 20 ms = 2.0 s
    assert sig.duration == pytest.approx(2.0)
    toks = codec.encode(sig)
    assert toks.layers.shape == (8, 100)
    assert toks.frame_rate == 50


def test_encode_deterministic(codec):
    sig = text_to_signal("hello there", "v2")
    a = codec.encode(sig)
    b = codec.encode(sig)
    assert np.array_equal(a.layers, b.layers)


def test_encode_too_short(codec):
    with pytest.raises(SignalTooShort):
        codec.encode(SpeechSignal(SAMPLE_RATE, np.zeros(80, dtype=np.float32)))


def test_decode_duration_and_determinism(codec):
    sig = text_to_signal("see you soon", "v1")
    toks = codec.encode(sig)
    p1 = voice_prompt("a", "v1")
    p2 = voice_prompt("b", "v3")
    out1 = codec.decode(toks.first_layer, p1)
    out1b = codec.decode(toks.first_layer, p1)
    out2 = codec.decode(toks.first_layer, p2)
    assert out1.duration == pytest.approx(toks.length / 50)
    assert np.array_equal(out1.samples, out1b.samples)
    assert not np.array_equal(out1.samples, out2.samples)


def test_decode_index_out_of_range(codec):
    with pytest.raises(IndexOutOfRange):
        codec.decode([0, 5, 100000], voice_prompt("a", "v1"))


def test_reencode_accuracy_at_least_90_percent(codec):
    accs = []
    for v in VOICES[:4]:
        prompt = voice_prompt("char", v)
        for t in TEXTS[:6]:
            toks = codec.encode(text_to_signal(t, v))
            out = codec.decode(toks.first_layer, prompt)
            toks2 = codec.encode(out)
            accs.append(float(np.mean(toks.layers[0] == toks2.layers[0])))
    assert np.mean(accs) >= 0.9


def test_voice_cloning_similarity_ordering(codec):
    # decode output should sound most like the prompt's voice (majority of trials)
    rng = np.random.default_rng(0)
    prompts = {v: voice_prompt("c", v) for v in VOICES[:4]}
    wins = trials = 0
    for _ in range(50):
        v = VOICES[int(rng.integers(0, 4))]
        t = TEXTS[int(rng.integers(0, len(TEXTS)))]
        toks = codec.encode(text_to_signal(t, v))
        out = codec.decode(toks.first_layer, prompts[v])
        tv = timbre_vector(out)
        own = cosine(tv, timbre_vector(prompts[v].signal))
        others = [cosine(tv, timbre_vector(prompts[q].signal))
                  for q in VOICES[:4] if q != v]
        wins += all(own > o for o in others)
        trials += 1
    assert wins > trials / 2


def test_rvq_residual_sum_property(codec):
    from motionchat.speech.codec import frame_features, rvq_feature_quantize

    sig = text_to_signal("tell me a story", "v0")
    feats = codec.normalize(frame_features(sig))
    for row in feats[:5]:
        indices, residual = rvq_feature_quantize(row.astype(np.float64), codec)
        total = sum(codec.books[k].entries[i] for k, i in enumerate(indices)) + residual
        assert np.allclose(total, row, atol=1e-10)


def test_first_layer_ignores_prompt(codec):
    # encoding has no prompt argument at all; layers depend only on the signal
    sig = text_to_signal("what do you think", "v2")
    assert np.array_equal(codec.encode(sig).layers, codec.encode(sig).layers)


def test_wav_round_trip(tmp_path, codec):
    sig = text_to_signal("goodbye friend", "v1")
    save_wav(sig, tmp_path / "a.wav")
    back = load_wav(tmp_path / "a.wav")
    assert back.sample_rate == SAMPLE_RATE
    assert back.samples.shape == sig.samples.shape
    assert np.max(np.abs(back.samples - sig.samples)) < 1e-4


def test_codec_checkpoint_round_trip(tmp_path, codec):
    from motionchat.checkpoint import load_checkpoint, save_checkpoint
    from motionchat.speech import SpeechCodec

    config, tensors = codec.state()
    save_checkpoint(tmp_path / "speech.ckpt", "speech-codec", config, tensors)
    ck = load_checkpoint(tmp_path / "speech.ckpt", expect_kind="speech-codec")
    restored = SpeechCodec.from_state(ck.config, ck.tensors)
    sig = text_to_signal("hello there", "v0")
    assert np.array_equal(codec.encode(sig).layers, restored.encode(sig).layers)
    p = voice_prompt("c", "v0")
    assert np.array_equal(codec.decode([1, 2, 3], p).samples,
                          restored.decode([1, 2, 3], p).samples)
