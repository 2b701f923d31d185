"""WAV PCM-16 mono read/write."""

import wave

import numpy as np

from .synth import SpeechSignal


def save_wav(signal: SpeechSignal, path):
    pcm = np.clip(np.asarray(signal.samples, dtype=np.float64), -1.0, 1.0)
    data = (pcm * 32767.0).round().astype("<i2").tobytes()
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(signal.sample_rate)
        w.writeframes(data)


def load_wav(path) -> SpeechSignal:
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1 or w.getsampwidth() != 2:
            raise ValueError(f"{path}: expected mono PCM-16")
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32767.0
    return SpeechSignal(rate, samples)
