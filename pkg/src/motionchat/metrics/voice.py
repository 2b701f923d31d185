"""Voice similarity via timbre envelopes."""

from __future__ import annotations

import numpy as np

from ..speech.codec import timbre_vector
from ..speech.synth import SpeechSignal


def vc_similarity(a: SpeechSignal, b: SpeechSignal) -> float:
    """Cosine similarity of 16-dim timbre vectors; 0 when either is silent."""
    ta = timbre_vector(a)
    tb = timbre_vector(b)
    na, nb = np.linalg.norm(ta), np.linalg.norm(tb)
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(np.clip(ta @ tb / (na * nb), -1.0, 1.0))
