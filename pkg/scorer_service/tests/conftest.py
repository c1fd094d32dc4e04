"""Shared fixtures for the scorer-service test suite.

The expensive pieces (building and briefly pretraining the tiny base
model, then fine-tuning an adapter on the frozen fixture dataset) run
once per session and are shared by the unit, smoke, and acceptance
tests.
"""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
TRAIN_DATASET = FIXTURES / "train_dataset.jsonl"

# Hyperparameters for the smoke-test model. The base is intentionally
# tiny (trains on CPU in well under a minute); the short language-model
# pretraining pass is what gives its final hidden states any prompt
# sensitivity at all, and the high adapter learning rate/alpha make the
# fine-tune move label probabilities decisively on 200 examples.
TINY_BASE = dict(hidden_size=128, n_layers=2, n_heads=4, pretrain_epochs=15)
TINY_TRAIN = dict(
    epochs=50,
    learning_rate=1e-2,
    rank=16,
    alpha=64.0,
    batch_size=16,
    target_names=("lm_head",),
)


def load_fixture_records() -> list[dict]:
    with TRAIN_DATASET.open("r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@pytest.fixture(scope="session")
def fixture_records() -> list[dict]:
    return load_fixture_records()


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory, fixture_records) -> str:
    """A small pretrained causal LM whose vocabulary covers the fixture."""
    from scorer_service.prompts import render_prompt
    from scorer_service.tiny import build_tiny_base

    out = tmp_path_factory.mktemp("tiny_base")
    texts = [render_prompt(r) for r in fixture_records]
    build_tiny_base(texts, out, **TINY_BASE)
    return str(out)


@dataclass
class TrainedRun:
    base_path: str
    adapter_path: str
    result: "object"
    pre_pos_mean: float
    post_pos_scores: list[float]
    post_neg_scores: list[float]

    @property
    def post_pos_mean(self) -> float:
        return statistics.mean(self.post_pos_scores)


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory, tiny_base, fixture_records) -> TrainedRun:
    """One fine-tuning run on the fixture, with pre/post scores recorded."""
    from scorer_service.model import ModelScorer
    from scorer_service.prompts import render_prompt
    from scorer_service.train import TrainConfig, train

    pos = [render_prompt(r) for r in fixture_records if r["label"] == "Yes"]
    neg = [render_prompt(r) for r in fixture_records if r["label"] == "No"]
    pre = ModelScorer(tiny_base)
    pre_pos_mean = statistics.mean(pre.yes_probability(t)[0] for t in pos)

    out = tmp_path_factory.mktemp("adapter")
    result = train(
        TrainConfig(
            dataset_path=str(TRAIN_DATASET),
            base_model_path=tiny_base,
            output_dir=str(out),
            **TINY_TRAIN,
        )
    )
    post = ModelScorer(tiny_base, adapter_path=str(out))
    return TrainedRun(
        base_path=tiny_base,
        adapter_path=str(out),
        result=result,
        pre_pos_mean=pre_pos_mean,
        post_pos_scores=[post.yes_probability(t)[0] for t in pos],
        post_neg_scores=[post.yes_probability(t)[0] for t in neg],
    )
