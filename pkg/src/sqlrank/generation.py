"""Candidate pool production: prompt rendering, sampling client, SQL
extraction from chain-of-thought completions, and pool persistence.

Pools are stored one JSON record per line so long generation runs can be
resumed, and so saved pools can be replayed without any model endpoint.
"""
from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus import BenchmarkQuestion, SchemaText

log = logging.getLogger(__name__)

GENERATION_PROMPT_TEMPLATE = """\
You are a data science expert. Below, you are provided with a database schema and a natural language question. Your task is to understand the schema and generate a valid SQL query to answer the question.

Database Engine: SQLite

Database Schema: {db_details}
This schema describes the database's structure, including tables, columns, primary keys, foreign keys, and any relevant relationships or constraints.

Question: {question}

Instructions:
- Make sure you only output the information that is asked in the question. If the question asks for a specific column, make sure to only include that column in the SELECT clause, nothing more.
- The generated query should return all of the information asked in the question without any missing or extra information.
- Before generating the final SQL query, please think through the steps of how to write the query.

Output Format:
In your answer, please enclose the generated SQL query in a code block:
```
Your SQL query
```

Take a deep breath and think step by step to find the correct SQL query.
"""

AUTH_TOKEN_ENV_VAR = "SQLRANK_API_TOKEN"


@dataclass(frozen=True)
class GenerationConfig:
    n_candidates: int = 32
    temperature: float = 0.8
    max_tokens: int = 2048
    endpoint_url: str = "http://localhost:8000/v1"
    model_name: str = ""
    seed: int | None = None
    max_retries: int = 3
    request_timeout_secs: float = 120.0
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def effective_temperature(self) -> float:
        # N=1 means greedy decoding regardless of the configured temperature.
        return 0.0 if self.n_candidates == 1 else self.temperature

    def meta(self) -> dict:
        return {
            "model_name": self.model_name,
            "n_candidates": self.n_candidates,
            "temperature": self.effective_temperature,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CandidateQuery:
    index: int
    sql: str
    raw_completion: str


@dataclass(frozen=True)
class CandidatePool:
    question_id: str
    candidates: tuple[CandidateQuery, ...]
    generator_meta: dict = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        for i, candidate in enumerate(self.candidates):
            if candidate.index != i:
                raise ValueError(
                    f"pool {self.question_id}: candidate at position {i} "
                    f"has index {candidate.index}"
                )

    def prefix(self, n: int) -> "CandidatePool":
        """First n candidates (prefix semantics for N-sweeps)."""
        if not 1 <= n <= len(self.candidates):
            raise ValueError(f"prefix length {n} out of range")
        return CandidatePool(self.question_id, self.candidates[:n], self.generator_meta)


def render_generation_prompt(schema: SchemaText, question: BenchmarkQuestion) -> str:
    """Instantiate the zero-shot CoT generation prompt, byte-deterministic.

    BIRD-style evidence hints are appended after the question text.
    """
    if schema.db_id != question.db_id:
        raise ValueError(
            f"schema is for {schema.db_id!r}, question is for {question.db_id!r}"
        )
    question_text = question.text
    if question.evidence:
        question_text = f"{question_text}\nEvidence: {question.evidence}"
    return GENERATION_PROMPT_TEMPLATE.format(
        db_details=schema.ddl, question=question_text
    )


class SamplingError(RuntimeError):
    """Endpoint failure that persisted through all retries."""


def _request_completion(
    prompt: str, cfg: GenerationConfig, session: requests.Session, seed: int | None
) -> str:
    url = cfg.endpoint_url.rstrip("/") + "/chat/completions"
    headers = {}
    token = os.environ.get(AUTH_TOKEN_ENV_VAR)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.effective_temperature,
        "max_tokens": cfg.max_tokens,
    }
    if seed is not None:
        body["seed"] = seed

    last_error = "unknown error"
    for attempt in range(1, cfg.max_retries + 1):
        try:
            response = session.post(
                url, json=body, headers=headers, timeout=cfg.request_timeout_secs
            )
            if response.status_code == 401 or response.status_code == 403:
                raise SamplingError(
                    f"authentication failure ({response.status_code}) from {url}"
                )
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except SamplingError:
            raise
        except (requests.RequestException, KeyError, ValueError) as exc:
            last_error = str(exc)
            if attempt < cfg.max_retries:
                backoff = 2.0 ** (attempt - 1)
                log.warning("request failed (attempt %d): %s; retrying in %.1fs",
                            attempt, exc, backoff)
                time.sleep(backoff)
    raise SamplingError(
        f"endpoint {url} failed after {cfg.max_retries} attempts: {last_error}"
    )


def sample_candidates(prompt: str, cfg: GenerationConfig) -> list[str]:
    """Request exactly N completions, reassembled in index order.

    Requests run concurrently up to cfg.max_in_flight; per-candidate seeds
    derive from cfg.seed so output is scheduling-independent.
    """
    session = requests.Session()
    seeds = [
        None if cfg.seed is None else cfg.seed + i
        for i in range(cfg.n_candidates)
    ]
    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        futures = [
            pool.submit(_request_completion, prompt, cfg, session, seed)
            for seed in seeds
        ]
        return [f.result() for f in futures]


_CODE_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_SQL_START = re.compile(r"\b(SELECT|WITH)\b", re.IGNORECASE)


def extract_sql(raw_completion: str) -> str:
    """Pull the final SQL answer out of a CoT completion.

    Last fenced code block wins (intermediate sketches are common); without
    a fence, the last SELECT/WITH onwards; empty string when neither exists.
    """
    fences = _CODE_FENCE.findall(raw_completion)
    if fences:
        return fences[-1].strip()
    matches = list(_SQL_START.finditer(raw_completion))
    if matches:
        statement = raw_completion[matches[-1].start():]
        return statement.split(";")[0].strip()
    return ""


class PoolFormatError(ValueError):
    """Malformed or inconsistent pool file."""


def save_pools(pools: list[CandidatePool], path: Path | str) -> None:
    """Write pools as one record per line, candidates in index order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for pool in pools:
            for candidate in pool.candidates:
                record = {
                    "question_id": pool.question_id,
                    "index": candidate.index,
                    "raw_completion": candidate.raw_completion,
                    "sql": candidate.sql,
                    "generator_meta": pool.generator_meta,
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_pools(path: Path | str, expect_n: int | None = None) -> list[CandidatePool]:
    """Read pools back in file order; optionally enforce a strict pool size."""
    path = Path(path)
    grouped: dict[str, list[CandidateQuery]] = {}
    meta: dict[str, dict] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                candidate = CandidateQuery(
                    index=record["index"],
                    sql=record["sql"],
                    raw_completion=record["raw_completion"],
                )
                qid = record["question_id"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise PoolFormatError(f"{path}: record {lineno}: {exc}") from exc
            grouped.setdefault(qid, []).append(candidate)
            meta.setdefault(qid, record.get("generator_meta", {}))

    pools = []
    for qid, candidates in grouped.items():
        candidates.sort(key=lambda c: c.index)
        if [c.index for c in candidates] != list(range(len(candidates))):
            raise PoolFormatError(
                f"{path}: pool {qid}: candidate indices are not 0..N-1"
            )
        if expect_n is not None and len(candidates) != expect_n:
            raise PoolFormatError(
                f"{path}: pool {qid}: expected {expect_n} candidates, "
                f"found {len(candidates)}"
            )
        pools.append(CandidatePool(qid, tuple(candidates), meta[qid]))
    return pools
