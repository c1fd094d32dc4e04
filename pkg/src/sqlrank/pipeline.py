"""Shared orchestration: cached execution, labeling runs, record assembly.

Gold queries execute once per question; candidate outcomes are cached by
(db_id, sql) so duplicate candidate texts execute once per run.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .corpus import (
    BenchmarkQuestion,
    DatabaseRef,
    SchemaText,
    _DB_DIR_CANDIDATES,
    _first_existing,
    find_database,
    load_benchmark,
    serialize_schema,
)
from .generation import CandidatePool
from .labeling import (
    Label,
    LabeledExample,
    examples_from_labels,
    label_candidate,
)
from .metrics import QuestionRecord
from .scoring import (
    CandidateScore,
    MockHashBinding,
    OracleBinding,
    PromptVariant,
    RemoteBinding,
    ScoreRequest,
    ScorerBinding,
    render_result_preview,
    score_pool,
)
from .sqlexec import ExecutionOutcome, execute_query

log = logging.getLogger(__name__)


class MissingArtifactError(FileNotFoundError):
    """A required upstream artifact does not exist."""


def require_artifact(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(
            f"missing required artifact {path}; run `{producer}` first"
        )
    return path


@dataclass
class Corpus:
    questions: list[BenchmarkQuestion]
    db_root: Path
    schemas: dict[str, SchemaText]

    def question(self, qid: str) -> BenchmarkQuestion:
        for q in self.questions:
            if q.id == qid:
                return q
        raise KeyError(f"unknown question id {qid!r}")

    def database(self, db_id: str) -> DatabaseRef:
        return find_database(self.db_root, db_id)


def load_corpus(config: RunConfig) -> Corpus:
    root = Path(config.dataset_root)
    questions = load_benchmark(root, config.split)
    db_root = _first_existing(root, _DB_DIR_CANDIDATES[config.split])
    assert db_root is not None  # load_benchmark already checked
    schemas = {}
    for q in questions:
        if q.db_id not in schemas:
            schemas[q.db_id] = serialize_schema(find_database(db_root, q.db_id))
    return Corpus(questions=questions, db_root=db_root, schemas=schemas)


class ExecutionCache:
    """Per-run cache of outcomes keyed by (db_id, sql hash)."""

    def __init__(self, timeout_secs: float):
        self.timeout_secs = timeout_secs
        self._cache: dict[tuple[str, str], ExecutionOutcome] = {}

    def run(self, db: DatabaseRef, sql: str) -> ExecutionOutcome:
        key = (db.db_id, hashlib.sha256(sql.encode()).hexdigest())
        if key not in self._cache:
            self._cache[key] = execute_query(db, sql, self.timeout_secs)
        return self._cache[key]


@dataclass
class LabeledQuestion:
    question: BenchmarkQuestion
    pool: CandidatePool
    gold_outcome: ExecutionOutcome
    outcomes: list[ExecutionOutcome]
    labels: list[Label]


def label_question(
    question: BenchmarkQuestion,
    pool: CandidatePool,
    db: DatabaseRef,
    cache: ExecutionCache,
) -> LabeledQuestion:
    gold_outcome = cache.run(db, question.gold_sql)
    outcomes = []
    labels = []
    for candidate in pool.candidates:
        outcome = (
            cache.run(db, candidate.sql)
            if candidate.sql.strip()
            else ExecutionOutcome.error("empty SQL")
        )
        outcomes.append(outcome)
        labels.append(label_candidate(candidate, gold_outcome, outcome))
    return LabeledQuestion(question, pool, gold_outcome, outcomes, labels)


def save_label_trace(
    labeled: list[LabeledQuestion], path: Path, header: dict
) -> None:
    """Per-candidate label records, question order then candidate index."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"__header__": header}, sort_keys=True) + "\n")
        for lq in labeled:
            for candidate, label in zip(lq.pool.candidates, lq.labels):
                fh.write(json.dumps({
                    "question_id": lq.question.id,
                    "index": candidate.index,
                    "label": label.value,
                }, sort_keys=True) + "\n")


def load_label_trace(path: Path) -> dict[tuple[str, int], Label]:
    labels: dict[tuple[str, int], Label] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if "__header__" in record:
                continue
            labels[(record["question_id"], record["index"])] = Label(
                record["label"]
            )
    return labels


def build_binding(config: RunConfig, labels_path: Path | None) -> ScorerBinding:
    kind, _, arg = config.scorer.partition(":")
    if kind == "mockhash":
        return MockHashBinding(seed=int(arg) if arg else config.seed)
    if kind == "remote":
        return RemoteBinding(arg)
    assert kind == "oracle"
    if labels_path is None:
        raise MissingArtifactError(
            "oracle scorer requires a labels artifact; run `sqlrank label` first"
        )
    return OracleBinding(load_label_trace(require_artifact(labels_path, "sqlrank label")))


def score_question(
    binding: ScorerBinding,
    corpus: Corpus,
    lq: LabeledQuestion,
    variant: PromptVariant,
    prefilter_executable: bool = False,
    max_in_flight: int = 4,
) -> list[CandidateScore]:
    """Score every candidate (discarded ones included unless prefiltered)."""
    schema = corpus.schemas[lq.question.db_id]
    reqs = []
    for candidate, outcome in zip(lq.pool.candidates, lq.outcomes):
        preview = None
        if variant in (PromptVariant.DATA_ONLY, PromptVariant.DATA_PLUS_SQL,
                       PromptVariant.INSTRUCTION):
            preview = render_result_preview(outcome)
        reqs.append(ScoreRequest(
            schema_ddl=schema.ddl,
            question_text=lq.question.text,
            candidate_sql=candidate.sql,
            variant=variant,
            result_preview=preview,
        ))
    scores = score_pool(binding, lq.question.id, reqs, max_in_flight)
    if prefilter_executable:
        scores = [
            CandidateScore(s.candidate_index, 0.0)
            if not lq.outcomes[s.candidate_index].is_ok
            else s
            for s in scores
        ]
    return scores


def run_labeling(
    config: RunConfig, corpus: Corpus, pools: list[CandidatePool]
) -> tuple[list[LabeledQuestion], list[BenchmarkQuestion]]:
    """Label every pool; returns labeled questions plus gold failures.

    Questions whose gold query fails to execute are excluded and reported,
    not fatal.
    """
    by_id = {q.id: q for q in corpus.questions}
    cache = ExecutionCache(config.exec_timeout_secs)
    labeled: list[LabeledQuestion] = []
    gold_failures: list[BenchmarkQuestion] = []
    for pool in pools:
        if pool.question_id not in by_id:
            raise KeyError(f"pool references unknown question {pool.question_id!r}")
    order = {q.id: i for i, q in enumerate(corpus.questions)}
    for pool in sorted(pools, key=lambda p: order[p.question_id]):
        question = by_id[pool.question_id]
        db = corpus.database(question.db_id)
        gold_outcome = cache.run(db, question.gold_sql)
        if not gold_outcome.is_ok:
            log.warning(
                "gold query for question %s failed (%s); excluding question",
                question.id, gold_outcome.kind.value,
            )
            gold_failures.append(question)
            continue
        labeled.append(label_question(question, pool, db, cache))
    return labeled, gold_failures


def build_records(
    config: RunConfig,
    corpus: Corpus,
    labeled: list[LabeledQuestion],
    binding: ScorerBinding,
) -> list[QuestionRecord]:
    records = []
    variant = PromptVariant(config.prompt_variant)
    for lq in labeled:
        scores = score_question(
            binding, corpus, lq, variant,
            config.prefilter_executable, config.max_in_flight,
        )
        records.append(QuestionRecord(
            question_id=lq.question.id,
            difficulty=lq.question.difficulty,
            pool=lq.pool,
            outcomes=tuple(lq.outcomes),
            labels=tuple(lq.labels),
            scores=tuple(scores),
        ))
    return records


def dataset_examples(
    labeled: list[LabeledQuestion],
    corpus: Corpus,
    variant: PromptVariant,
) -> list[LabeledExample]:
    examples: list[LabeledExample] = []
    data_bearing = variant in (
        PromptVariant.DATA_ONLY, PromptVariant.DATA_PLUS_SQL,
        PromptVariant.INSTRUCTION,
    )
    for lq in labeled:
        previews = None
        if data_bearing:
            previews = [render_result_preview(o) for o in lq.outcomes]
        examples.extend(examples_from_labels(
            question_id=lq.question.id,
            db_id=lq.question.db_id,
            schema=corpus.schemas[lq.question.db_id],
            question_text=lq.question.text,
            candidates=list(lq.pool.candidates),
            labels=lq.labels,
            prompt_variant=variant.value,
            result_previews=previews,
        ))
    return examples
