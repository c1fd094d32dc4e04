"""Build a small randomly initialized base model for smoke tests and demos.

The tokenizer is word-level over the supplied corpus (plus the label
words), so "Yes" and "No" are guaranteed single tokens and the whole
stack runs in seconds on a CPU.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from tokenizers.trainers import WordLevelTrainer
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

UNK = "[UNK]"
PAD = "[PAD]"


def build_tokenizer(texts: Iterable[str]) -> PreTrainedTokenizerFast:
    tokenizer = Tokenizer(WordLevel(unk_token=UNK))
    tokenizer.pre_tokenizer = Whitespace()
    trainer = WordLevelTrainer(special_tokens=[UNK, PAD])
    tokenizer.train_from_iterator(
        list(texts) + ["Yes No"], trainer=trainer
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tokenizer, unk_token=UNK, pad_token=PAD
    )


def build_tiny_base(
    texts: Iterable[str],
    out_dir: str | Path,
    hidden_size: int = 64,
    n_layers: int = 2,
    n_heads: int = 2,
    n_positions: int = 512,
    seed: int = 0,
    pretrain_epochs: int = 3,
    pretrain_lr: float = 1e-3,
) -> Path:
    """Write a small base checkpoint loadable via from_pretrained.

    A short language-modeling pass over the corpus gives the base model
    context-dependent representations; without it every adapter run starts
    from random features and a frozen base cannot tell prompts apart at
    the shared final tokens.
    """
    out_dir = Path(out_dir)
    texts = list(texts)
    tokenizer = build_tokenizer(texts)
    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=len(tokenizer),
        n_positions=n_positions,
        n_embd=hidden_size,
        n_layer=n_layers,
        n_head=n_heads,
        bos_token_id=None,
        eos_token_id=None,
    )
    model = GPT2LMHeadModel(config)
    if pretrain_epochs > 0:
        _pretrain(model, tokenizer, texts, n_positions, pretrain_epochs,
                  pretrain_lr, seed)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return out_dir


def _pretrain(model, tokenizer, texts, n_positions, epochs, lr, seed):
    pad_id = tokenizer.pad_token_id
    encoded = [
        tokenizer.encode(t, add_special_tokens=False)[: n_positions - 1]
        for t in texts
    ]
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    rng = torch.Generator().manual_seed(seed)
    model.train()
    for _ in range(epochs):
        order = torch.randperm(len(encoded), generator=rng).tolist()
        for start in range(0, len(order), 8):
            batch = [encoded[i] for i in order[start:start + 8]]
            width = max(len(ids) for ids in batch)
            input_ids = torch.tensor(
                [ids + [pad_id] * (width - len(ids)) for ids in batch]
            )
            attention = torch.tensor(
                [[1] * len(ids) + [0] * (width - len(ids)) for ids in batch]
            )
            labels = input_ids.masked_fill(attention == 0, -100)
            optimizer.zero_grad()
            loss = model(input_ids, attention_mask=attention, labels=labels).loss
            loss.backward()
            optimizer.step()
    model.eval()
