"""Pluggable judge-score clients (excluded from the acceptance gate)."""

from __future__ import annotations

import json

from ..errors import ClientError


class MockJudge:
    """Deterministic rubric: scores from surface features of the transcript."""

    def score(self, transcript: str) -> dict:
        if not transcript.strip():
            raise ValueError("empty transcript")
        words = transcript.split()
        relevance = 1 + min(4, len(set(words)) // 5)
        consistency = 1 + min(4, sum(1 for w in words if len(w) > 4) // 3)
        return {"context_relevance": relevance,
                "character_consistency": consistency}


class TextGenJudge:
    """Judge backed by a text-generation client returning a JSON verdict."""

    def __init__(self, textgen):
        self.textgen = textgen

    def score(self, transcript: str) -> dict:
        if not transcript.strip():
            raise ValueError("empty transcript")
        out = self.textgen.complete(f"JUDGE\n{transcript}")
        try:
            scores = json.loads(out)
            return {"context_relevance": int(scores["context_relevance"]),
                    "character_consistency": int(scores["character_consistency"])}
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ClientError(f"judge returned malformed verdict: {out!r}") from e


def judge_metrics(transcripts: list[str], judge) -> dict:
    """Mean 1-5 scores over transcripts."""
    if not transcripts:
        raise ValueError("no transcripts to judge")
    totals = {"context_relevance": 0.0, "character_consistency": 0.0}
    for t in transcripts:
        scores = judge.score(t)
        for k in totals:
            if not 1 <= scores[k] <= 5:
                raise ClientError(f"judge score {k}={scores[k]} outside 1-5")
            totals[k] += scores[k]
    return {k: v / len(transcripts) for k, v in totals.items()}
