"""Run configuration: one structured file, CLI-flag overrides on top.

The validated config snapshot is serialized verbatim into every output
artifact for provenance.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .scoring import PromptVariant
from .selection import Strategy


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    dataset_root: str = ""
    split: str = "dev"
    n_candidates: int = 32
    temperature: float = 0.8
    exec_timeout_secs: float = 30.0
    seed: int = 42
    scorer: str = "mockhash"  # oracle | mockhash[:seed] | remote:<url>
    prompt_variant: str = PromptVariant.SQL_ONLY.value
    strategies: list[str] = field(
        default_factory=lambda: [s.value for s in Strategy]
    )
    output_dir: str = "out"
    endpoint_url: str = "http://localhost:8000/v1"
    model_name: str = ""
    max_tokens: int = 2048
    max_in_flight: int = 4
    maj_include_errors: bool = False
    prefilter_executable: bool = False

    def validate(self) -> None:
        if not self.dataset_root:
            raise ConfigError("dataset_root is required")
        if self.split not in ("train", "dev", "test"):
            raise ConfigError(f"invalid split {self.split!r}")
        if self.n_candidates < 1:
            raise ConfigError("n_candidates must be >= 1")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.exec_timeout_secs <= 0:
            raise ConfigError("exec_timeout_secs must be positive")
        try:
            PromptVariant(self.prompt_variant)
        except ValueError:
            raise ConfigError(
                f"invalid prompt_variant {self.prompt_variant!r}"
            ) from None
        for name in self.strategies:
            try:
                Strategy(name)
            except ValueError:
                raise ConfigError(f"invalid strategy {name!r}") from None
        kind = self.scorer.split(":", 1)[0]
        if kind not in ("oracle", "mockhash", "remote"):
            raise ConfigError(f"invalid scorer {self.scorer!r}")
        if kind == "remote" and ":" not in self.scorer:
            raise ConfigError("remote scorer requires a URL: remote:<url>")

    def snapshot(self) -> dict:
        data = dataclasses.asdict(self)
        data["harness_version"] = __version__
        return data

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)

    @classmethod
    def load(cls, path: Path | str | None, overrides: dict) -> "RunConfig":
        data: dict = {}
        if path is not None:
            raw = Path(path).read_text(encoding="utf-8")
            loaded = yaml.safe_load(raw) or {}
            if not isinstance(loaded, dict):
                raise ConfigError(f"{path}: config must be a mapping")
            data.update(loaded)
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**data)
        config.validate()
        return config
