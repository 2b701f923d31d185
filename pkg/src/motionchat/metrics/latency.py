"""Latency harness: drives scripted sessions against a serving endpoint.

Timing is monotonic wall time at the harness, from request-complete to first
streamed event (first token) and to the terminal event (full response).
Sessions run sequentially; this measures latency, not throughput.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import httpx
import numpy as np


@dataclass
class LatencyRecord:
    method: str
    first_token_s: list[float] = field(default_factory=list)
    full_response_s: list[float] = field(default_factory=list)
    token_counts: list[int] = field(default_factory=list)

    def add(self, first: float, full: float, tokens: int):
        if not (0 <= first <= full):
            raise ValueError(f"times must be monotone, got {first} > {full}")
        self.first_token_s.append(first)
        self.full_response_s.append(full)
        self.token_counts.append(tokens)

    def summary(self) -> dict:
        def stats(xs):
            arr = np.asarray(xs)
            return {"mean": float(arr.mean()), "p50": float(np.percentile(arr, 50)),
                    "p95": float(np.percentile(arr, 95))}

        return {"method": self.method, "turns": len(self.first_token_s),
                "first_token": stats(self.first_token_s),
                "full_response": stats(self.full_response_s),
                "mean_tokens": float(np.mean(self.token_counts))}


def iter_sse(response) -> "iter[tuple[str, dict]]":
    """(event, data) pairs from an httpx streaming SSE response."""
    event = None
    data_lines: list[str] = []
    for line in response.iter_lines():
        if line.startswith("event:"):
            event = line[len("event:"):].strip()
        elif line.startswith("data:"):
            data_lines.append(line[len("data:"):].strip())
        elif line == "" and event is not None:
            yield event, json.loads("\n".join(data_lines) or "{}")
            event = None
            data_lines = []


def latency_harness(base_url: str, script: list[dict], method: str,
                    trials: int, profile_id: str = None,
                    client: httpx.Client | None = None,
                    sampler: dict | None = None) -> LatencyRecord:
    """Run `trials` scripted sessions; each script entry is one turn request."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not script:
        raise ValueError("script must contain at least one turn")
    own_client = client is None
    client = client or httpx.Client(timeout=120.0)
    record = LatencyRecord(method=method)
    try:
        for _ in range(trials):
            resp = client.post(f"{base_url}/sessions", json={
                "profile_id": profile_id, "method": method,
                "sampler": sampler or {}})
            resp.raise_for_status()
            session_id = resp.json()["session_id"]
            for turn in script:
                t0 = time.monotonic()
                first = None
                tokens = 0
                with client.stream(
                        "POST", f"{base_url}/sessions/{session_id}/turn",
                        json=turn) as stream:
                    stream.raise_for_status()
                    for event, data in iter_sse(stream):
                        if first is None:
                            first = time.monotonic() - t0
                        if event in ("motion_chunk", "speech_chunk"):
                            tokens += len(data.get("tokens", []))
                        if event in ("final", "error"):
                            break
                full = time.monotonic() - t0
                record.add(first if first is not None else full, full, tokens)
            client.delete(f"{base_url}/sessions/{session_id}")
    finally:
        if own_client:
            client.close()
    return record
