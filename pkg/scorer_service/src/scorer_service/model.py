"""Scorer backends: a causal-LM scorer and a deterministic mock.

The LM scorer reads P(Yes) as a two-way softmax over the logits of the
"Yes" and "No" label tokens at the next-token position after the prompt.
Prompts over the token budget are truncated from the front, which drops
schema text first (every prompt variant leads with the schema).
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServiceConfig:
    model_path: str = ""
    adapter_path: str | None = None
    device: str = "cpu"
    max_prompt_tokens: int = 512
    mock: bool = False
    port: int = 8100

    def __post_init__(self) -> None:
        if not self.mock and not self.model_path:
            raise ValueError("model_path is required unless mock mode is on")
        if self.max_prompt_tokens < 8:
            raise ValueError("max_prompt_tokens must be >= 8")


class ScorerBackend:
    """Anything that maps a prompt to (p_yes, p_no) with p_yes + p_no = 1."""

    model_name: str = ""

    def yes_probability(self, prompt: str) -> tuple[float, float]:
        raise NotImplementedError

    def yes_probability_batch(self, prompts: list[str]) -> list[tuple[float, float]]:
        return [self.yes_probability(p) for p in prompts]


class MockScorer(ScorerBackend):
    """Keyed-hash pseudo-probabilities; no model, fully deterministic."""

    model_name = "mock"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def yes_probability(self, prompt: str) -> tuple[float, float]:
        digest = hashlib.sha256(f"{self.seed}\x00{prompt}".encode()).digest()
        p_yes = int.from_bytes(digest[:8], "big") / float(2 ** 64)
        return p_yes, 1.0 - p_yes


def resolve_label_token_ids(tokenizer) -> tuple[int, int]:
    """First token id of each label, encoded at next-token position.

    Tries the leading-space form first (matches generation position in
    BPE-style tokenizers); word-level tokenizers ignore the space.
    """
    ids = []
    for label in ("Yes", "No"):
        for text in (f" {label}", label):
            encoded = tokenizer.encode(text, add_special_tokens=False)
            if encoded:
                ids.append(encoded[0])
                break
        else:
            raise ValueError(f"tokenizer cannot encode label {label!r}")
    if ids[0] == ids[1]:
        raise ValueError("tokenizer maps Yes and No to the same token")
    return ids[0], ids[1]


class ModelScorer(ScorerBackend):
    def __init__(
        self,
        model_path: str | Path,
        adapter_path: str | Path | None = None,
        device: str = "cpu",
        max_prompt_tokens: int = 512,
    ):
        self.tokenizer = AutoTokenizer.from_pretrained(str(model_path))
        self.model = AutoModelForCausalLM.from_pretrained(str(model_path))
        if adapter_path is not None:
            from .lora import load_adapter
            load_adapter(self.model, adapter_path)
        self.model.to(device)
        self.model.eval()
        self.device = device
        limit = getattr(self.model.config, "n_positions", None) or getattr(
            self.model.config, "max_position_embeddings", max_prompt_tokens + 1
        )
        self.max_prompt_tokens = min(max_prompt_tokens, limit - 1)
        self.yes_id, self.no_id = resolve_label_token_ids(self.tokenizer)
        self.model_name = Path(model_path).name or str(model_path)

    def _encode(self, prompt: str) -> list[int]:
        ids = self.tokenizer.encode(prompt, add_special_tokens=False)
        if len(ids) > self.max_prompt_tokens:
            # schema leads the prompt, so front truncation drops it first
            ids = ids[-self.max_prompt_tokens:]
        if not ids:
            raise ValueError("prompt encodes to zero tokens")
        return ids

    @torch.no_grad()
    def yes_probability(self, prompt: str) -> tuple[float, float]:
        return self.yes_probability_batch([prompt])[0]

    @torch.no_grad()
    def yes_probability_batch(self, prompts: list[str]) -> list[tuple[float, float]]:
        out = []
        for prompt in prompts:
            ids = torch.tensor([self._encode(prompt)], device=self.device)
            logits = self.model(ids).logits[0, -1]
            pair = torch.softmax(
                torch.stack([logits[self.yes_id], logits[self.no_id]]), dim=0
            )
            out.append((float(pair[0]), float(pair[1])))
        return out


def build_backend(config: ServiceConfig) -> ScorerBackend:
    if config.mock:
        return MockScorer()
    log.info("loading model from %s", config.model_path)
    return ModelScorer(
        config.model_path,
        adapter_path=config.adapter_path,
        device=config.device,
        max_prompt_tokens=config.max_prompt_tokens,
    )
