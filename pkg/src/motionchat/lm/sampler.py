"""Sampling-based streamed generation."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import torch

from ..errors import ContextOverflow
from .model import CausalTransformer


@dataclass
class SamplerConfig:
    temperature: float = 1.0
    top_k: int = 40
    max_new_tokens: int = 256
    stop_tokens: frozenset[int] = frozenset()
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        self.stop_tokens = frozenset(self.stop_tokens)


@dataclass
class GenEvent:
    token: int
    timestamp_ns: int


class GenerationStream:
    """Iterates GenEvents in generation order with monotone timestamps.

    After exhaustion, `truncated` tells whether the context filled up before
    a stop token, and `stop_reason` is one of stop_token/max_new_tokens/
    context_overflow.
    """

    def __init__(self, model: CausalTransformer, prefix: list[int],
                 sampler: SamplerConfig):
        if not prefix:
            raise ValueError("prefix must be nonempty")
        if len(prefix) > model.cfg.max_context:
            raise ContextOverflow(
                f"prefix of {len(prefix)} exceeds max_context {model.cfg.max_context}")
        self.model = model
        self.prefix = list(prefix)
        self.sampler = sampler
        self.tokens: list[int] = []
        self.truncated = False
        self.stop_reason: str | None = None

    def __iter__(self):
        model = self.model
        sampler = self.sampler
        gen = torch.Generator().manual_seed(sampler.seed)
        was_training = model.training
        model.eval()
        try:
            with torch.no_grad():
                caches = model.new_caches()
                context = torch.tensor(self.prefix, dtype=torch.long)
                pos0 = 0
                for step in range(sampler.max_new_tokens):
                    # the generated token must still fit inside max_context
                    if pos0 + context.shape[0] >= model.cfg.max_context:
                        self.truncated = True
                        self.stop_reason = "context_overflow"
                        return
                    logits = model(context, pos0=pos0, caches=caches)[-1]
                    logits = logits / sampler.temperature
                    k = min(sampler.top_k, logits.shape[-1])
                    top_vals, top_idx = torch.topk(logits, k)
                    probs = torch.softmax(top_vals.to(torch.float64), dim=-1)
                    pick = int(torch.multinomial(probs, 1, generator=gen))
                    token = int(top_idx[pick])
                    self.tokens.append(token)
                    yield GenEvent(token=token, timestamp_ns=time.monotonic_ns())
                    if token in sampler.stop_tokens:
                        self.stop_reason = "stop_token"
                        return
                    pos0 += context.shape[0]
                    context = torch.tensor([token], dtype=torch.long)
                self.stop_reason = "max_new_tokens"
        finally:
            if was_training:
                model.train()


def generate(model: CausalTransformer, prefix: list[int],
             sampler: SamplerConfig) -> GenerationStream:
    """Streamed continuation of `prefix`; consume by iterating the result."""
    return GenerationStream(model, prefix, sampler)


def generate_tokens(model: CausalTransformer, prefix: list[int],
                    sampler: SamplerConfig) -> tuple[list[int], GenerationStream]:
    """Convenience: run the stream to completion, returning tokens + stream."""
    stream = generate(model, prefix, sampler)
    tokens = [ev.token for ev in stream]
    return tokens, stream
