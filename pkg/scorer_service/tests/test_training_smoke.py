"""Fine-tuning smoke tests on the frozen 200-example fixture dataset.

These use a tiny CPU-trainable base model (session fixture) so the whole
loop — dataset validation, adapter injection, masked-label loss,
checkpointing, reloading for inference — runs end to end in about a
minute.
"""
from __future__ import annotations

import json
from pathlib import Path

import pytest
import torch
from transformers import AutoTokenizer

from scorer_service.model import resolve_label_token_ids
from scorer_service.train import _collate, _encode_example


def test_final_loss_below_initial(trained_run):
    assert trained_run.result.final_loss < trained_run.result.initial_loss


def test_positive_mean_score_increases(trained_run):
    assert trained_run.post_pos_mean > trained_run.pre_pos_mean


def test_epoch_losses_recorded(trained_run):
    losses = trained_run.result.epoch_losses
    assert len(losses) == 50
    assert losses[-1] == pytest.approx(trained_run.result.final_loss)


def test_checkpoint_is_adapter_only(trained_run):
    out = Path(trained_run.adapter_path)
    state = torch.load(out / "adapter.pt", map_location="cpu")
    assert state
    assert all("lora_" in key for key in state)
    config = json.loads((out / "adapter_config.json").read_text())
    assert config["base_model_path"] == trained_run.base_path
    # No full-model weights are written alongside the adapter.
    assert not (out / "pytorch_model.bin").exists()
    assert not (out / "model.safetensors").exists()


def test_trained_examples_counted(trained_run):
    assert trained_run.result.n_examples == 200


def _encoded_batch(base_path, records, loss_over_prompt):
    tokenizer = AutoTokenizer.from_pretrained(base_path)
    label_ids = resolve_label_token_ids(tokenizer)
    batch = [
        _encode_example(r, tokenizer, label_ids, 512) for r in records[:4]
    ]
    return batch, _collate(batch, tokenizer.pad_token_id, loss_over_prompt)


def test_default_loss_supervises_label_token_only(tiny_base, fixture_records):
    batch, (input_ids, attention, labels) = _encoded_batch(
        tiny_base, fixture_records, False
    )
    for row, (ids, prompt_len) in zip(range(len(batch)), batch):
        supervised = (labels[row] != -100).nonzero().flatten().tolist()
        assert supervised == [prompt_len]
        assert labels[row, prompt_len] == input_ids[row, prompt_len]


def test_loss_over_prompt_supervises_whole_sequence(tiny_base, fixture_records):
    batch, (input_ids, attention, labels) = _encoded_batch(
        tiny_base, fixture_records, True
    )
    for row, (ids, _) in zip(range(len(batch)), batch):
        supervised = (labels[row] != -100).nonzero().flatten().tolist()
        assert supervised == list(range(len(ids)))
        assert labels[row, : len(ids)].tolist() == ids


def test_padding_never_supervised(tiny_base, fixture_records):
    for flag in (False, True):
        batch, (input_ids, attention, labels) = _encoded_batch(
            tiny_base, fixture_records, flag
        )
        assert torch.all(labels[attention == 0] == -100)
