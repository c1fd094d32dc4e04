"""Minimal low-rank adapters for linear projections.

Each wrapped projection computes base(x) + (alpha / r) * x @ A @ B with
A randomly initialized and B zero, so an untrained adapter is a no-op.
Works on both torch.nn.Linear and the transposed Conv1D projection used
by GPT-style blocks. Only A and B require grad; the base model stays
frozen.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import torch
from torch import nn

ADAPTER_WEIGHTS = "adapter.pt"
ADAPTER_CONFIG = "adapter_config.json"
DEFAULT_TARGETS = ("c_attn", "c_proj", "c_fc")


class LoRAProjection(nn.Module):
    def __init__(self, base: nn.Module, rank: int, alpha: float):
        super().__init__()
        if rank < 1:
            raise ValueError("rank must be >= 1")
        in_features, out_features = _projection_shape(base)
        self.base = base
        self.rank = rank
        self.scaling = alpha / rank
        self.lora_a = nn.Parameter(torch.empty(in_features, rank))
        self.lora_b = nn.Parameter(torch.zeros(rank, out_features))
        nn.init.kaiming_uniform_(self.lora_a, a=math.sqrt(5))
        for param in self.base.parameters():
            param.requires_grad_(False)

    def forward(self, x):
        return self.base(x) + (x @ self.lora_a @ self.lora_b) * self.scaling


def _projection_shape(module: nn.Module) -> tuple[int, int]:
    if isinstance(module, nn.Linear):
        return module.in_features, module.out_features
    weight = getattr(module, "weight", None)
    if weight is not None and weight.dim() == 2 and hasattr(module, "nf"):
        # transformers Conv1D stores weight as (in, out)
        return weight.shape[0], weight.shape[1]
    raise TypeError(f"cannot adapt module of type {type(module).__name__}")


def apply_lora(
    model: nn.Module,
    rank: int = 8,
    alpha: float = 16.0,
    target_names: tuple[str, ...] = DEFAULT_TARGETS,
) -> int:
    """Wrap every matching projection in-place; returns how many were wrapped."""
    wrapped = 0
    for name, module in list(model.named_modules()):
        leaf = name.rsplit(".", 1)[-1]
        if leaf not in target_names or isinstance(module, LoRAProjection):
            continue
        parent = model.get_submodule(name.rsplit(".", 1)[0]) if "." in name else model
        setattr(parent, leaf, LoRAProjection(module, rank, alpha))
        wrapped += 1
    if wrapped == 0:
        raise ValueError(f"no modules named {target_names} found to adapt")
    for name, param in model.named_parameters():
        if "lora_" not in name:
            param.requires_grad_(False)
    return wrapped


def lora_parameters(model: nn.Module):
    return [p for n, p in model.named_parameters() if "lora_" in n]


def lora_state_dict(model: nn.Module) -> dict:
    return {n: p for n, p in model.state_dict().items() if "lora_" in n}


def save_adapter(
    model: nn.Module, path: str | Path, rank: int, alpha: float,
    target_names: tuple[str, ...] = DEFAULT_TARGETS, extra: dict | None = None,
) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    torch.save(lora_state_dict(model), path / ADAPTER_WEIGHTS)
    config = {
        "rank": rank,
        "alpha": alpha,
        "target_names": list(target_names),
    }
    if extra:
        config.update(extra)
    (path / ADAPTER_CONFIG).write_text(json.dumps(config, indent=2) + "\n")


def load_adapter(model: nn.Module, path: str | Path) -> None:
    """Re-create the adapter structure on a base model and load its weights."""
    path = Path(path)
    config = json.loads((path / ADAPTER_CONFIG).read_text())
    apply_lora(
        model,
        rank=config["rank"],
        alpha=config["alpha"],
        target_names=tuple(config["target_names"]),
    )
    state = torch.load(path / ADAPTER_WEIGHTS, map_location="cpu")
    missing = model.load_state_dict(state, strict=False).missing_keys
    unexpected = [k for k in missing if "lora_" in k]
    if unexpected:
        raise ValueError(f"adapter weights missing for {unexpected[:3]}...")
