"""Execution-equivalence labeling and training-dataset synthesis.

A candidate is Correct when its canonical result set equals the gold
query's, Incorrect when it executes but differs, and Discarded when it
fails to execute (or no SQL could be extracted). Discarded candidates
never reach the emitted dataset.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .corpus import SchemaText
from .generation import CandidateQuery
from .sqlexec import ExecutionOutcome, OutcomeKind, result_sets_equal


class Label(str, Enum):
    CORRECT = "Correct"
    INCORRECT = "Incorrect"
    DISCARDED = "Discarded"


@dataclass(frozen=True)
class LabeledExample:
    question_id: str
    db_id: str
    schema_ddl: str
    question_text: str
    candidate_sql: str
    label: str  # "Yes" | "No"
    prompt_variant: str = "SqlOnly"
    result_preview: str | None = None

    def __post_init__(self) -> None:
        if self.label not in ("Yes", "No"):
            raise ValueError(f"label must be Yes/No, got {self.label!r}")


@dataclass(frozen=True)
class DatasetStats:
    n_questions: int
    n_examples: int
    n_correct: int
    n_incorrect: int

    @property
    def pct_correct(self) -> float:
        return 100.0 * self.n_correct / self.n_examples if self.n_examples else 0.0

    @property
    def pct_incorrect(self) -> float:
        return 100.0 * self.n_incorrect / self.n_examples if self.n_examples else 0.0


class GoldExecutionError(RuntimeError):
    """A gold query failed to execute; the question is a configuration error."""


def label_candidate(
    candidate: CandidateQuery,
    gold_outcome: ExecutionOutcome,
    cand_outcome: ExecutionOutcome,
) -> Label:
    if not gold_outcome.is_ok:
        raise GoldExecutionError(
            f"gold query did not execute cleanly: {gold_outcome.kind.value} "
            f"{gold_outcome.message}"
        )
    if not candidate.sql.strip():
        return Label.DISCARDED
    if cand_outcome.kind in (OutcomeKind.ERROR, OutcomeKind.TIMEOUT):
        return Label.DISCARDED
    assert gold_outcome.result is not None and cand_outcome.result is not None
    if result_sets_equal(cand_outcome.result, gold_outcome.result):
        return Label.CORRECT
    return Label.INCORRECT


def examples_from_labels(
    question_id: str,
    db_id: str,
    schema: SchemaText,
    question_text: str,
    candidates: list[CandidateQuery],
    labels: list[Label],
    prompt_variant: str = "SqlOnly",
    result_previews: list[str | None] | None = None,
) -> list[LabeledExample]:
    """One example per non-discarded candidate, in candidate order."""
    if result_previews is None:
        result_previews = [None] * len(candidates)
    examples = []
    for candidate, label, preview in zip(candidates, labels, result_previews):
        if label is Label.DISCARDED:
            continue
        examples.append(LabeledExample(
            question_id=question_id,
            db_id=db_id,
            schema_ddl=schema.ddl,
            question_text=question_text,
            candidate_sql=candidate.sql,
            label="Yes" if label is Label.CORRECT else "No",
            prompt_variant=prompt_variant,
            result_preview=preview,
        ))
    return examples


def dataset_stats(examples: list[LabeledExample]) -> DatasetStats:
    n_correct = sum(1 for e in examples if e.label == "Yes")
    return DatasetStats(
        n_questions=len({e.question_id for e in examples}),
        n_examples=len(examples),
        n_correct=n_correct,
        n_incorrect=len(examples) - n_correct,
    )


def balance_dataset(examples: list[LabeledExample]) -> list[LabeledExample]:
    """Per question, keep min(s_+, s_-) of each class, first-occurrence order.

    Forces an exact 50/50 class split both per question and globally.
    Idempotent; the output is always a subset of the input.
    """
    by_question: dict[str, list[LabeledExample]] = {}
    order: list[str] = []
    for example in examples:
        if example.question_id not in by_question:
            order.append(example.question_id)
        by_question.setdefault(example.question_id, []).append(example)

    balanced: list[LabeledExample] = []
    for qid in order:
        group = by_question[qid]
        n_pos = sum(1 for e in group if e.label == "Yes")
        keep = min(n_pos, len(group) - n_pos)
        pos_quota = neg_quota = keep
        for example in group:
            if example.label == "Yes" and pos_quota > 0:
                balanced.append(example)
                pos_quota -= 1
            elif example.label == "No" and neg_quota > 0:
                balanced.append(example)
                neg_quota -= 1
    return balanced


def save_dataset(
    examples: list[LabeledExample], path: Path | str, header: dict | None = None
) -> None:
    """Record-per-line dataset file; optional provenance header record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"__header__": header}, sort_keys=True) + "\n")
        for example in examples:
            record = {
                "question_id": example.question_id,
                "db_id": example.db_id,
                "schema_ddl": example.schema_ddl,
                "question": example.question_text,
                "sql": example.candidate_sql,
                "label": example.label,
                "prompt_variant": example.prompt_variant,
            }
            if example.result_preview is not None:
                record["result_preview"] = example.result_preview
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_dataset(path: Path | str) -> tuple[list[LabeledExample], dict | None]:
    path = Path(path)
    examples: list[LabeledExample] = []
    header: dict | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if "__header__" in record:
                    header = record["__header__"]
                    continue
                examples.append(LabeledExample(
                    question_id=record["question_id"],
                    db_id=record["db_id"],
                    schema_ddl=record["schema_ddl"],
                    question_text=record["question"],
                    candidate_sql=record["sql"],
                    label=record["label"],
                    prompt_variant=record.get("prompt_variant", "SqlOnly"),
                    result_preview=record.get("result_preview"),
                ))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}: record {lineno}: {exc}") from exc
    return examples, header
