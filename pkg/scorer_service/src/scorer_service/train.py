"""Adapter training on record-per-line labeled datasets.

The objective is next-token NLL on the label token ("Yes"/"No") appended
to the rendered verification prompt. By default prompt positions are
masked out of the loss; --loss-over-prompt supervises the full sequence
instead.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn
from transformers import AutoModelForCausalLM, AutoTokenizer

from .lora import DEFAULT_TARGETS, apply_lora, lora_parameters, save_adapter
from .model import resolve_label_token_ids
from .prompts import RecordFormatError, render_prompt

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    dataset_path: str
    base_model_path: str
    output_dir: str
    rank: int = 8
    alpha: float = 16.0
    target_names: tuple[str, ...] = DEFAULT_TARGETS
    epochs: int = 1
    batch_size: int = 8
    learning_rate: float = 1e-3
    max_prompt_tokens: int = 512
    loss_over_prompt: bool = False
    seed: int = 42
    device: str = "cpu"


@dataclass
class TrainResult:
    initial_loss: float
    final_loss: float
    epoch_losses: list[float] = field(default_factory=list)
    n_examples: int = 0
    checkpoint_dir: str = ""


def load_training_records(path: str | Path) -> list[dict]:
    """Parse and validate the dataset before any training happens."""
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"{path}: line {lineno}: {exc}") from exc
            if "__header__" in record:
                continue
            label = record.get("label")
            if label not in ("Yes", "No"):
                raise RecordFormatError(
                    f"{path}: line {lineno}: label must be Yes/No, got {label!r}"
                )
            render_prompt(record)  # raises on missing fields / bad variant
            records.append(record)
    if not records:
        raise RecordFormatError(f"{path}: no training records")
    return records


def _encode_example(record, tokenizer, label_ids, max_prompt_tokens):
    prompt_ids = tokenizer.encode(
        render_prompt(record), add_special_tokens=False
    )
    if len(prompt_ids) > max_prompt_tokens:
        prompt_ids = prompt_ids[-max_prompt_tokens:]
    label_id = label_ids[0] if record["label"] == "Yes" else label_ids[1]
    return prompt_ids + [label_id], len(prompt_ids)


def _collate(batch, pad_id, loss_over_prompt):
    width = max(len(ids) for ids, _ in batch)
    input_ids, attention, labels = [], [], []
    for ids, prompt_len in batch:
        pad = width - len(ids)
        input_ids.append(ids + [pad_id] * pad)
        attention.append([1] * len(ids) + [0] * pad)
        if loss_over_prompt:
            supervised = list(ids)
        else:
            supervised = [-100] * prompt_len + ids[prompt_len:]
        labels.append(supervised + [-100] * pad)
    return (
        torch.tensor(input_ids),
        torch.tensor(attention),
        torch.tensor(labels),
    )


def _mean_loss(model, batches, device) -> float:
    model.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for input_ids, attention, labels in batches:
            out = model(
                input_ids.to(device),
                attention_mask=attention.to(device),
                labels=labels.to(device),
            )
            n = int((labels != -100).sum())
            total += float(out.loss) * n
            count += n
    return total / count


def train(config: TrainConfig) -> TrainResult:
    torch.manual_seed(config.seed)
    records = load_training_records(config.dataset_path)
    tokenizer = AutoTokenizer.from_pretrained(config.base_model_path)
    model = AutoModelForCausalLM.from_pretrained(config.base_model_path)
    model.to(config.device)
    label_ids = resolve_label_token_ids(tokenizer)
    pad_id = tokenizer.pad_token_id
    if pad_id is None:
        pad_id = 0

    examples = [
        _encode_example(r, tokenizer, label_ids, config.max_prompt_tokens)
        for r in records
    ]
    rng = random.Random(config.seed)

    def batches(order):
        for start in range(0, len(order), config.batch_size):
            chunk = [examples[i] for i in order[start:start + config.batch_size]]
            yield _collate(chunk, pad_id, config.loss_over_prompt)

    fixed_order = list(range(len(examples)))
    apply_lora(model, config.rank, config.alpha, config.target_names)
    initial = _mean_loss(model, batches(fixed_order), config.device)
    log.info("initial loss %.4f over %d examples", initial, len(examples))

    optimizer = torch.optim.AdamW(lora_parameters(model), lr=config.learning_rate)
    epoch_losses = []
    step = 0
    for epoch in range(config.epochs):
        model.train()
        order = list(fixed_order)
        rng.shuffle(order)
        for input_ids, attention, labels in batches(order):
            optimizer.zero_grad()
            out = model(
                input_ids.to(config.device),
                attention_mask=attention.to(config.device),
                labels=labels.to(config.device),
            )
            out.loss.backward()
            optimizer.step()
            step += 1
            log.info("step %d loss %.4f", step, out.loss.item())
        epoch_loss = _mean_loss(model, batches(fixed_order), config.device)
        epoch_losses.append(epoch_loss)
        log.info("epoch %d/%d loss %.4f", epoch + 1, config.epochs, epoch_loss)

    out_dir = Path(config.output_dir)
    save_adapter(
        model, out_dir, config.rank, config.alpha, config.target_names,
        extra={"base_model_path": str(config.base_model_path),
               "loss_over_prompt": config.loss_over_prompt},
    )
    return TrainResult(
        initial_loss=initial,
        final_loss=epoch_losses[-1],
        epoch_losses=epoch_losses,
        n_examples=len(examples),
        checkpoint_dir=str(out_dir),
    )
