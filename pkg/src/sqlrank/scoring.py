"""Verification prompt rendering and candidate scoring bindings.

A score is the probability that the candidate is a correct answer,
obtained as the two-way softmax over the Yes/No label tokens. Bindings
decouple the harness from the model runtime: Remote talks to a scorer
service over HTTP, MockHash produces deterministic pseudo-random scores,
and Oracle looks scores up from known labels (1.0 / 0.0).
"""
from __future__ import annotations

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import requests

from .labeling import Label
from .sqlexec import ExecutionOutcome, OutcomeKind

log = logging.getLogger(__name__)

ERROR_PREVIEW_MAX_CHARS = 512
PREVIEW_MAX_ROWS = 20
REMOTE_TIMEOUT_SECS = 60.0
REMOTE_MAX_RETRIES = 3


class PromptVariant(str, Enum):
    SQL_ONLY = "SqlOnly"
    DATA_ONLY = "DataOnly"
    DATA_PLUS_SQL = "DataPlusSql"
    INSTRUCTION = "Instruction"


_SQL_ONLY_TEMPLATE = """\
Question: {context}
SQL: {sql}
Is the SQL correct?"""

_DATA_ONLY_TEMPLATE = """\
Question: {context}
Data retrieved: {data}
Based on data and question, in your opinion is the SQL correct?"""

_DATA_PLUS_SQL_TEMPLATE = """\
Question: {context}
Data: {data}
SQL: {sql}
Is the SQL correct?"""

_INSTRUCTION_TEMPLATE = """\
You are an expert SQL evaluator. Given a database schema, a question, the SQL query and data returned, determine if the SQL query correctly answers the question based on the schema. Respond only with Yes or No.
Input:

Question and database schema: {context}
- SQL Query: {sql}
- Data returned: {data}

Instructions:
1. Analyze the database schema to understand the table structure, columns, and relationships.
2. Evaluate the provided SQL query against the question to determine if it accurately retrieves the intended data.
3. Respond solely with Yes if the SQL query is correct, or No if it is incorrect.
Output:
Yes
or
No
Is the SQL correct?"""


@dataclass(frozen=True)
class ScoreRequest:
    schema_ddl: str
    question_text: str
    candidate_sql: str
    variant: PromptVariant = PromptVariant.SQL_ONLY
    result_preview: str | None = None


@dataclass(frozen=True)
class CandidateScore:
    candidate_index: int
    p_yes: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_yes <= 1.0:
            raise ValueError(f"p_yes out of [0, 1]: {self.p_yes}")


def render_result_preview(outcome: ExecutionOutcome) -> str:
    """Text form of an execution outcome for data-bearing prompt variants."""
    if outcome.kind is OutcomeKind.TIMEOUT:
        return "EXECUTION ERROR: query timed out"
    if outcome.kind is OutcomeKind.ERROR:
        return f"EXECUTION ERROR: {outcome.message}"[:ERROR_PREVIEW_MAX_CHARS]
    result = outcome.result
    assert result is not None
    lines = [" | ".join(result.columns)]
    rows = result.sorted_rows()
    for row in rows[:PREVIEW_MAX_ROWS]:
        lines.append(" | ".join(_render_cell(cell) for cell in row))
    if len(rows) > PREVIEW_MAX_ROWS:
        lines.append(f"... ({len(rows) - PREVIEW_MAX_ROWS} more rows)")
    return "\n".join(lines)


def _render_cell(cell) -> str:
    if cell is None:
        return "NULL"
    if isinstance(cell, bytes):
        return cell.hex()
    return str(cell)


def render_verification_prompt(req: ScoreRequest) -> str:
    """Instantiate the variant's template; deterministic for fixed inputs."""
    context = f"{req.schema_ddl}\n{req.question_text}"
    needs_data = req.variant in (
        PromptVariant.DATA_ONLY, PromptVariant.DATA_PLUS_SQL
    )
    if needs_data and req.result_preview is None:
        raise ValueError(f"{req.variant.value} requires result_preview")
    data = req.result_preview if req.result_preview is not None else ""
    if req.variant is PromptVariant.SQL_ONLY:
        return _SQL_ONLY_TEMPLATE.format(context=context, sql=req.candidate_sql)
    if req.variant is PromptVariant.DATA_ONLY:
        return _DATA_ONLY_TEMPLATE.format(context=context, data=data)
    if req.variant is PromptVariant.DATA_PLUS_SQL:
        return _DATA_PLUS_SQL_TEMPLATE.format(
            context=context, data=data, sql=req.candidate_sql
        )
    return _INSTRUCTION_TEMPLATE.format(
        context=context, data=data, sql=req.candidate_sql
    )


class ScoringError(RuntimeError):
    pass


class ScorerBinding:
    """Source of correctness scores; immutable and shareable across workers."""

    def score(self, question_id: str, req: ScoreRequest) -> float:
        raise NotImplementedError


class MockHashBinding(ScorerBinding):
    """Deterministic pseudo-random scores from a keyed hash; no model needed."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score(self, question_id: str, req: ScoreRequest) -> float:
        key = f"{self.seed}\x00{question_id}\x00{req.candidate_sql}".encode()
        digest = hashlib.sha256(key).digest()
        return int.from_bytes(digest[:8], "big") / float(2 ** 64)


class OracleBinding(ScorerBinding):
    """Perfect scores from known labels: 1.0 for Correct, 0.0 otherwise."""

    def __init__(self, labels: dict[tuple[str, int], Label]):
        # keyed by (question_id, candidate_index)
        self._labels = dict(labels)
        self._current_index: int | None = None

    def score_indexed(self, question_id: str, index: int) -> float:
        try:
            label = self._labels[(question_id, index)]
        except KeyError:
            raise ScoringError(
                f"oracle has no label for question {question_id!r} "
                f"candidate {index}"
            ) from None
        return 1.0 if label is Label.CORRECT else 0.0

    def score(self, question_id: str, req: ScoreRequest) -> float:
        raise ScoringError(
            "oracle binding scores by candidate index; use score_pool"
        )


class RemoteBinding(ScorerBinding):
    """Delegates to a scorer service implementing POST /score."""

    def __init__(
        self,
        base_url: str,
        timeout_secs: float = REMOTE_TIMEOUT_SECS,
        max_retries: int = REMOTE_MAX_RETRIES,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout_secs = timeout_secs
        self.max_retries = max_retries
        self._session = requests.Session()

    def score(self, question_id: str, req: ScoreRequest) -> float:
        prompt = render_verification_prompt(req)
        last_error = "unknown error"
        for attempt in range(1, self.max_retries + 1):
            try:
                response = self._session.post(
                    f"{self.base_url}/score",
                    json={"prompt": prompt},
                    timeout=self.timeout_secs,
                )
                response.raise_for_status()
                return float(response.json()["p_yes"])
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = str(exc)
                if attempt < self.max_retries:
                    time.sleep(2.0 ** (attempt - 1))
        raise ScoringError(
            f"scorer at {self.base_url} failed after {self.max_retries} "
            f"attempts: {last_error}"
        )


def score_candidate(
    binding: ScorerBinding, question_id: str, req: ScoreRequest, index: int = 0
) -> CandidateScore:
    if isinstance(binding, OracleBinding):
        return CandidateScore(index, binding.score_indexed(question_id, index))
    return CandidateScore(index, binding.score(question_id, req))


def score_pool(
    binding: ScorerBinding,
    question_id: str,
    requests_by_index: list[ScoreRequest],
    max_in_flight: int = 4,
) -> list[CandidateScore]:
    """One score per candidate, index order preserved.

    Remote calls run concurrently up to max_in_flight; pure bindings are
    scored inline.
    """
    if not requests_by_index:
        raise ValueError("pool is empty")
    if isinstance(binding, RemoteBinding):
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            futures = [
                pool.submit(score_candidate, binding, question_id, req, i)
                for i, req in enumerate(requests_by_index)
            ]
            return [f.result() for f in futures]
    return [
        score_candidate(binding, question_id, req, i)
        for i, req in enumerate(requests_by_index)
    ]
