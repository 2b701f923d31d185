"""Residual-VQ speech codec over band-energy features.

Analysis: non-overlapping 20 ms frames, Hann window, FFT magnitude pooled
into 64 linear bands, log-compressed, z-scored. An 8-layer residual
quantizer discretizes the features at 50 tokens/second per layer; the
first layer alone drives resynthesis (a sinusoid bank at band centers)
with a timbre tilt taken from a short voice prompt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2

from ..errors import DimMismatch, IndexOutOfRange, SignalTooShort
from ..tokenizer.codebook import Codebook, quantize_batch
from .synth import SAMPLE_RATE, UNIT_SAMPLES, SpeechSignal, VoicePrompt

N_LAYERS = 8
FRAME_RATE = 50  # tokens per second per layer
N_BANDS = 64
TIMBRE_DIM = 16
CODEBOOK_SIZE = 256
TIMBRE_TILT = 0.3


@dataclass
class RvqTokens:
    """Stacked residual token layers, all the same length."""

    layers: np.ndarray  # (N_LAYERS, L)
    frame_rate: int = FRAME_RATE

    def __post_init__(self):
        self.layers = np.asarray(self.layers, dtype=np.int64)
        if self.layers.ndim != 2:
            raise ValueError(f"layers must be 2-D, got {self.layers.shape}")

    @property
    def first_layer(self) -> list[int]:
        return [int(i) for i in self.layers[0]]

    @property
    def length(self) -> int:
        return self.layers.shape[1]


def _band_matrix() -> np.ndarray:
    """(N_BANDS, bins) pooling matrix: equal-width bands over rfft bins 1..160."""
    bins = UNIT_SAMPLES // 2 + 1
    edges = np.linspace(1, bins, N_BANDS + 1).astype(int)
    mat = np.zeros((N_BANDS, bins), dtype=np.float64)
    for b in range(N_BANDS):
        lo, hi = edges[b], max(edges[b] + 1, edges[b + 1])
        mat[b, lo:hi] = 1.0 / (hi - lo)
    return mat


_BANDS = _band_matrix()
_WINDOW = np.hanning(UNIT_SAMPLES)


def _band_of_bin() -> np.ndarray:
    bins = UNIT_SAMPLES // 2 + 1
    band = np.zeros(bins, dtype=np.int64)
    for b in range(N_BANDS):
        band[_BANDS[b] > 0] = b
    return band


_BAND_OF_BIN = _band_of_bin()


def frame_features(signal: SpeechSignal) -> np.ndarray:
    """Log band energies per 20 ms frame: (L, N_BANDS)."""
    samples = np.asarray(signal.samples, dtype=np.float64)
    n_frames = samples.shape[0] // UNIT_SAMPLES
    if n_frames < 1:
        raise SignalTooShort(
            f"{samples.shape[0]} samples < one {UNIT_SAMPLES}-sample frame")
    frames = samples[:n_frames * UNIT_SAMPLES].reshape(n_frames, UNIT_SAMPLES)
    spec = np.abs(np.fft.rfft(frames * _WINDOW, axis=1))
    return np.log1p(spec @ _BANDS.T * 4.0)


def timbre_vector(signal: SpeechSignal) -> np.ndarray:
    """16-dim mean spectral envelope; all-zero for silence."""
    try:
        feats = frame_features(signal)
    except SignalTooShort:
        return np.zeros(TIMBRE_DIM)
    env = feats.mean(axis=0)
    return env.reshape(TIMBRE_DIM, N_BANDS // TIMBRE_DIM).mean(axis=1)


@dataclass
class SpeechCodec:
    """Trained residual quantizer plus feature normalization.

    wavetable holds one representative 20 ms waveform per first-layer code
    (the training frame nearest the centroid); decoding concatenates these
    units under a timbre tilt toward the prompt's spectral envelope.
    """

    books: list[Codebook]
    feat_mean: np.ndarray
    feat_std: np.ndarray
    wavetable: np.ndarray = None  # (K, UNIT_SAMPLES)
    meta: dict = field(default_factory=dict)

    def normalize(self, feats):
        return (feats - self.feat_mean) / self.feat_std

    def denormalize(self, feats):
        return feats * self.feat_std + self.feat_mean

    def encode(self, signal: SpeechSignal) -> RvqTokens:
        """8 residual layers at 50 tokens/s; deterministic."""
        feats = self.normalize(frame_features(signal))
        residual = feats
        layers = []
        for book in self.books:
            idx, codes = quantize_batch(residual, book)
            layers.append(idx)
            residual = residual - codes
        return RvqTokens(layers=np.stack(layers), frame_rate=FRAME_RATE)

    def decode(self, first_layer: list[int], prompt: VoicePrompt) -> SpeechSignal:
        """Resynthesize from first-layer tokens; the prompt enters only through
        its timbre vector (same tokens + same prompt -> identical signal)."""
        book = self.books[0]
        idx = np.asarray(first_layer, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= book.size):
            raise IndexOutOfRange(f"speech token outside [0, {book.size})")
        units = self.wavetable[idx]  # (L, UNIT_SAMPLES)

        # spectral tilt toward the prompt's envelope, in the log band domain
        timbre = timbre_vector(prompt.signal)
        own = timbre_vector(SpeechSignal(SAMPLE_RATE, units.reshape(-1)))
        tilt64 = np.repeat(TIMBRE_TILT * (timbre - own), N_BANDS // TIMBRE_DIM)
        gain_bins = np.exp(tilt64[_BAND_OF_BIN])
        spec = np.fft.rfft(units, axis=1)
        out = np.fft.irfft(spec * gain_bins, n=UNIT_SAMPLES, axis=1).reshape(-1)
        out = np.clip(out, -1.0, 1.0)
        return SpeechSignal(SAMPLE_RATE, out.astype(np.float32))

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        tensors = {"feat_mean": self.feat_mean, "feat_std": self.feat_std,
                   "wavetable": self.wavetable}
        for i, b in enumerate(self.books):
            tensors[f"book{i}.entries"] = b.entries
            tensors[f"book{i}.usage"] = b.usage_count
        config = {"n_layers": len(self.books), "n_bands": N_BANDS,
                  "frame_rate": FRAME_RATE, "sample_rate": SAMPLE_RATE, **self.meta}
        return config, tensors

    @staticmethod
    def from_state(config: dict, tensors: dict[str, np.ndarray]) -> "SpeechCodec":
        books = [Codebook(entries=tensors[f"book{i}.entries"],
                          usage_count=tensors[f"book{i}.usage"].astype(np.int64))
                 for i in range(config["n_layers"])]
        return SpeechCodec(books=books, feat_mean=tensors["feat_mean"],
                           feat_std=tensors["feat_std"],
                           wavetable=tensors["wavetable"],
                           meta={k: v for k, v in config.items()
                                 if k not in ("n_layers", "n_bands", "frame_rate",
                                              "sample_rate")})


def _layer_entries(residual: np.ndarray, codebook_size: int,
                   rng: np.random.Generator):
    """Distinct entries for one layer: unique data rows, k-means-reduced when
    there are more types than codes, padded with perturbed copies otherwise.
    Entries are exact data rows so re-encoding a decoded unit cannot land on
    a duplicated entry by floating-point chance; rows are deduplicated with a
    1e-4 tolerance because batched FFT analysis of one unit type can differ in
    the last ulp. Returns (entries, row_index) where row_index[i] is the
    residual row an entry was taken from (-1 = pad)."""
    key = np.round(residual * 1e4).astype(np.int64)
    _, first_idx = np.unique(key, axis=0, return_index=True)
    uniq_idx = np.sort(first_idx)
    uniq = residual[uniq_idx]
    if uniq.shape[0] > codebook_size:
        centroids, _ = kmeans2(uniq, codebook_size, minit="++", seed=rng, iter=20)
        used = np.zeros(uniq.shape[0], dtype=bool)
        picks = []
        for c in centroids:
            order = np.argsort(((uniq - c) ** 2).sum(axis=1), kind="stable")
            pick = next((int(i) for i in order if not used[int(i)]), int(order[0]))
            used[pick] = True
            picks.append(pick)
        picks = np.array(sorted(picks))
        return uniq[picks], uniq_idx[picks]
    n_pad = codebook_size - uniq.shape[0]
    pad_src = rng.integers(0, uniq.shape[0], n_pad)
    pad = uniq[pad_src] + 0.05 * rng.standard_normal((n_pad, uniq.shape[1]))
    entries = np.concatenate([uniq, pad], axis=0)
    rows = np.concatenate([uniq_idx, np.full(n_pad, -1, dtype=np.int64)])
    return entries, rows


def train_speech_codec(corpus: list[SpeechSignal], seed: int = 0,
                       codebook_size: int = CODEBOOK_SIZE,
                       n_layers: int = N_LAYERS) -> SpeechCodec:
    """Fit residual codebooks layer-by-layer on the toy speech corpus."""
    if not corpus:
        raise ValueError("empty speech corpus")
    feats = np.concatenate([frame_features(s) for s in corpus], axis=0)
    waves = np.concatenate(
        [np.asarray(s.samples[:s.samples.shape[0] // UNIT_SAMPLES * UNIT_SAMPLES],
                    dtype=np.float32).reshape(-1, UNIT_SAMPLES) for s in corpus],
        axis=0)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std = np.maximum(std, max(float(std.max()) * 0.05, 1e-8))
    residual = (feats - mean) / std
    rng = np.random.default_rng(seed)
    books = []
    first_rows = None
    for layer in range(n_layers):
        entries, rows = _layer_entries(residual, codebook_size, rng)
        if layer == 0:
            first_rows = rows
        idx, codes = quantize_batch(residual, Codebook(entries=entries))
        counts = np.bincount(idx, minlength=entries.shape[0])
        books.append(Codebook(entries=entries, usage_count=counts.astype(np.int64)))
        residual = residual - codes

    # representative waveform per first-layer code (pads reuse a real unit)
    wavetable = np.zeros((books[0].size, UNIT_SAMPLES), dtype=np.float32)
    fallback = waves[0]
    for code, row in enumerate(first_rows):
        wavetable[code] = waves[row] if row >= 0 else fallback
    return SpeechCodec(books=books, feat_mean=mean, feat_std=std,
                       wavetable=wavetable, meta={"seed": seed})


def encode_speech(signal: SpeechSignal, codec: SpeechCodec) -> RvqTokens:
    return codec.encode(signal)


def decode_speech(first_layer: list[int], prompt: VoicePrompt,
                  codec: SpeechCodec) -> SpeechSignal:
    return codec.decode(first_layer, prompt)


def rvq_feature_quantize(feature: np.ndarray, codec: SpeechCodec):
    """Residual quantization of a single normalized feature vector."""
    from ..tokenizer.codebook import rvq_quantize

    if feature.shape != (codec.books[0].dim,):
        raise DimMismatch(f"feature shape {feature.shape}")
    return rvq_quantize(feature, codec.books)
