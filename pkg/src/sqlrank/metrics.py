"""Execution accuracy, Pass@N, difficulty stratification, and N-sweeps.

Percentages are exact float64 internally and rounded half-up to two
decimals only at the reporting boundary. Pass@n uses prefix semantics:
the first n candidates of each saved pool.
"""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP

from .corpus import Difficulty
from .generation import CandidatePool
from .labeling import Label
from .scoring import CandidateScore
from .selection import (
    SelectionResult,
    Strategy,
    partition_by_execution,
    select_baseline_first,
    select_ex_bon,
    select_majority,
    select_orm_bon,
)
from .sqlexec import ExecutionOutcome


def round_pct(value: float) -> float:
    """Half-up rounding to 2 decimals, applied only when reporting."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), ROUND_HALF_UP))


@dataclass(frozen=True)
class QuestionRecord:
    """Everything per-question evaluation needs, independent of strategy."""
    question_id: str
    difficulty: Difficulty
    pool: CandidatePool
    outcomes: tuple[ExecutionOutcome, ...]
    labels: tuple[Label, ...]  # per-candidate execution-equivalence labels
    scores: tuple[CandidateScore, ...]

    def __post_init__(self) -> None:
        n = len(self.pool.candidates)
        if not (len(self.outcomes) == len(self.labels) == len(self.scores) == n):
            raise ValueError(f"question {self.question_id}: ragged per-candidate data")

    def correct_bits(self) -> list[bool]:
        return [label is Label.CORRECT for label in self.labels]


@dataclass(frozen=True)
class QuestionEval:
    question_id: str
    difficulty: Difficulty
    correct_by_strategy: dict = field(hash=False)  # strategy value -> bool
    pass_bits: tuple[bool, ...]  # pass_bits[n-1] = any correct in first n

    def __post_init__(self) -> None:
        if any(a and not b for a, b in zip(self.pass_bits, self.pass_bits[1:])):
            raise ValueError("pass bit vector must be monotone non-decreasing")


def derive_seed(base_seed: int, n: int, question_id: str) -> int:
    """Stable per-(n, question) seed so sweep rows reproduce individually."""
    digest = hashlib.sha256(f"{base_seed}:{n}:{question_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def evaluate_question(
    record: QuestionRecord,
    n: int,
    seed: int,
    strategies: list[Strategy],
    maj_include_errors: bool = False,
) -> tuple[dict, dict[str, SelectionResult]]:
    """Run each strategy on the candidate prefix of length n."""
    pool = record.pool.prefix(n)
    outcomes = list(record.outcomes[:n])
    scores = [s for s in record.scores[:n]]
    bits = record.correct_bits()[:n]
    question_seed = derive_seed(seed, n, record.question_id)

    correctness: dict = {}
    selections: dict[str, SelectionResult] = {}
    for strategy in strategies:
        if strategy is Strategy.BASELINE_FIRST:
            result = select_baseline_first(pool)
        elif strategy is Strategy.MAJORITY:
            partition = partition_by_execution(pool, outcomes, maj_include_errors)
            result = select_majority(partition, question_seed)
        elif strategy is Strategy.EX_BON:
            result = select_ex_bon(pool, outcomes, question_seed)
        else:
            result = select_orm_bon(pool, scores)
        correctness[strategy.value] = bits[result.chosen_index]
        selections[strategy.value] = result
    return correctness, selections


def build_evals(
    records: list[QuestionRecord],
    n: int,
    seed: int,
    strategies: list[Strategy],
    maj_include_errors: bool = False,
) -> list[QuestionEval]:
    evals = []
    for record in records:
        correctness, _ = evaluate_question(
            record, n, seed, strategies, maj_include_errors
        )
        bits = record.correct_bits()
        pass_bits = []
        seen = False
        for bit in bits:
            seen = seen or bit
            pass_bits.append(seen)
        evals.append(QuestionEval(
            question_id=record.question_id,
            difficulty=record.difficulty,
            correct_by_strategy=correctness,
            pass_bits=tuple(pass_bits),
        ))
    return evals


def execution_accuracy(evals: list[QuestionEval], strategy: Strategy) -> float:
    if not evals:
        raise ValueError("empty evaluation set")
    correct = sum(1 for e in evals if e.correct_by_strategy[strategy.value])
    return round_pct(100.0 * correct / len(evals))


def pass_at_n(evals: list[QuestionEval], n: int) -> float:
    if not evals:
        raise ValueError("empty evaluation set")
    if any(n < 1 or n > len(e.pass_bits) for e in evals):
        raise ValueError(f"n={n} out of range for some pool")
    passed = sum(1 for e in evals if e.pass_bits[n - 1])
    return round_pct(100.0 * passed / len(evals))


def stratify_by_difficulty(
    evals: list[QuestionEval], strategy: Strategy
) -> dict[str, float]:
    """EX per non-empty difficulty stratum, plus Total."""
    strata: dict[str, list[QuestionEval]] = {}
    for e in evals:
        strata.setdefault(e.difficulty.value, []).append(e)
    out = {
        name: execution_accuracy(group, strategy)
        for name, group in strata.items()
    }
    out["Total"] = execution_accuracy(evals, strategy)
    return out


@dataclass(frozen=True)
class SweepRow:
    n: int
    strategy: Strategy
    ex_total: float
    ex_by_difficulty: dict = field(hash=False)
    pass_at_n: float


def n_sweep(
    records: list[QuestionRecord],
    n_values: list[int],
    seed: int,
    strategies: list[Strategy] | None = None,
    maj_include_errors: bool = False,
) -> list[SweepRow]:
    """One row per (n, strategy); deterministic given the base seed."""
    if strategies is None:
        strategies = list(Strategy)
    max_n = max(n_values)
    for record in records:
        if len(record.pool.candidates) < max_n:
            raise ValueError(
                f"pool {record.question_id} has fewer than {max_n} candidates"
            )
    rows = []
    for n in sorted(n_values):
        evals = build_evals(records, n, seed, strategies, maj_include_errors)
        p_at_n = pass_at_n(evals, n)
        for strategy in strategies:
            rows.append(SweepRow(
                n=n,
                strategy=strategy,
                ex_total=execution_accuracy(evals, strategy),
                ex_by_difficulty=stratify_by_difficulty(evals, strategy),
                pass_at_n=p_at_n,
            ))
    return rows


SWEEP_CSV_COLUMNS = [
    "n", "strategy", "ex_total",
    "ex_simple", "ex_moderate", "ex_challenging", "pass_at_n",
]


def sweep_to_csv(rows: list[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_CSV_COLUMNS)
    for row in rows:
        writer.writerow([
            row.n,
            row.strategy.value,
            f"{row.ex_total:.2f}",
            _fmt(row.ex_by_difficulty.get(Difficulty.SIMPLE.value)),
            _fmt(row.ex_by_difficulty.get(Difficulty.MODERATE.value)),
            _fmt(row.ex_by_difficulty.get(Difficulty.CHALLENGING.value)),
            f"{row.pass_at_n:.2f}",
        ])
    return buffer.getvalue()


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"
