"""Test-time selection strategies over one candidate pool.

Four strategies: first-candidate baseline, majority voting over
execution-equivalence clusters, execution-heuristic best-of-N, and
score-based (reward-model) best-of-N. All randomness flows through an
explicit seed so every selection is reproducible.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .generation import CandidatePool
from .scoring import CandidateScore
from .sqlexec import ExecutionOutcome, OutcomeKind, result_sets_equal

DEFAULT_SEED = 42


class Strategy(str, Enum):
    BASELINE_FIRST = "BaselineFirst"
    MAJORITY = "Majority"
    EX_BON = "ExBoN"
    ORM_BON = "OrmBoN"


@dataclass(frozen=True)
class ClusterPartition:
    """Disjoint clusters of execution-equivalent candidate indices.

    Clusters are ordered by first-member index; candidates whose execution
    failed are excluded from clustering.
    """
    clusters: tuple[tuple[int, ...], ...]
    excluded: tuple[int, ...]


@dataclass(frozen=True)
class SelectionResult:
    strategy: Strategy
    chosen_index: int
    evidence: dict = field(hash=False)
    rng_seed_used: int = DEFAULT_SEED


def partition_by_execution(
    pool: CandidatePool,
    outcomes: list[ExecutionOutcome],
    include_errors: bool = False,
) -> ClusterPartition:
    """Group candidates whose canonical result sets are equal.

    With include_errors, non-executable candidates form one extra cluster
    sharing the common "error" pseudo-result instead of being excluded.
    """
    if len(outcomes) != len(pool.candidates):
        raise ValueError("one outcome per candidate required")
    clusters: list[list[int]] = []
    representatives: list[ExecutionOutcome] = []
    excluded: list[int] = []
    error_cluster: list[int] = []
    for i, outcome in enumerate(outcomes):
        if outcome.kind is not OutcomeKind.OK:
            if include_errors:
                error_cluster.append(i)
            else:
                excluded.append(i)
            continue
        for cluster, rep in zip(clusters, representatives):
            assert rep.result is not None and outcome.result is not None
            if result_sets_equal(outcome.result, rep.result):
                cluster.append(i)
                break
        else:
            clusters.append([i])
            representatives.append(outcome)
    if error_cluster:
        clusters.append(error_cluster)
    clusters.sort(key=lambda c: c[0])
    return ClusterPartition(
        clusters=tuple(tuple(c) for c in clusters),
        excluded=tuple(excluded),
    )


def select_majority(
    partition: ClusterPartition, seed: int = DEFAULT_SEED
) -> SelectionResult:
    """Largest cluster wins (ties: earliest-formed); uniform draw within it.

    Falls back to index 0 when nothing executed.
    """
    evidence = {"cluster_sizes": [len(c) for c in partition.clusters],
                "clusters": [list(c) for c in partition.clusters],
                "excluded": list(partition.excluded)}
    if not partition.clusters:
        if not partition.excluded:
            raise ValueError("empty pool")
        return SelectionResult(Strategy.MAJORITY, 0, evidence, seed)
    best = max(partition.clusters, key=len)  # max() keeps the earliest tie
    chosen = random.Random(seed).choice(best)
    return SelectionResult(Strategy.MAJORITY, chosen, evidence, seed)


def heuristic_h(outcome: ExecutionOutcome) -> float:
    """Execution ladder: 0 not executable, 0.5 empty result, 1 non-empty."""
    if outcome.kind is not OutcomeKind.OK:
        return 0.0
    assert outcome.result is not None
    return 1.0 if outcome.result.n_rows >= 1 else 0.5


def select_ex_bon(
    pool: CandidatePool,
    outcomes: list[ExecutionOutcome],
    seed: int = DEFAULT_SEED,
) -> SelectionResult:
    """Uniform seeded draw among candidates attaining the maximum h."""
    if not pool.candidates:
        raise ValueError("empty pool")
    if len(outcomes) != len(pool.candidates):
        raise ValueError("one outcome per candidate required")
    scores = [heuristic_h(o) for o in outcomes]
    best = max(scores)
    argmax = [i for i, s in enumerate(scores) if s == best]
    chosen = random.Random(seed).choice(argmax)
    evidence = {"h": scores, "argmax": argmax}
    return SelectionResult(Strategy.EX_BON, chosen, evidence, seed)


def select_orm_bon(
    pool: CandidatePool, scores: list[CandidateScore]
) -> SelectionResult:
    """Deterministic argmax over p_yes; ties broken by lowest index."""
    if not pool.candidates:
        raise ValueError("empty pool")
    if len(scores) != len(pool.candidates):
        raise ValueError("one score per candidate required")
    by_index = sorted(scores, key=lambda s: s.candidate_index)
    chosen = max(range(len(by_index)), key=lambda i: by_index[i].p_yes)
    evidence = {"p_yes": [s.p_yes for s in by_index]}
    return SelectionResult(Strategy.ORM_BON, chosen, evidence, DEFAULT_SEED)


def select_baseline_first(pool: CandidatePool) -> SelectionResult:
    if not pool.candidates:
        raise ValueError("empty pool")
    return SelectionResult(Strategy.BASELINE_FIRST, 0, {}, DEFAULT_SEED)
