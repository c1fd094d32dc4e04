
import pytest
from hypothesis import given, settings, strategies as st

from sqlrank.corpus import Difficulty
from sqlrank.labeling import Label
from sqlrank.metrics import (
    QuestionEval,
    QuestionRecord,
    build_evals,
    derive_seed,
    evaluate_question,
    execution_accuracy,
    n_sweep,
    pass_at_n,
    round_pct,
    stratify_by_difficulty,
    sweep_to_csv,
)
from sqlrank.scoring import CandidateScore
from sqlrank.selection import Strategy

from conftest import make_outcome, make_pool


def make_record(qid, labels, difficulty=Difficulty.SIMPLE, rng=None):
    """Record whose outcomes/scores are consistent with the given labels.

    Correct candidates share the result {(1,)}; incorrect ones get distinct
    wrong results; discarded ones get errors and empty SQL.
    """
    sqls, outcomes, lab_enum, scores = [], [], [], []
    for i, lab in enumerate(labels):
        if lab == "C":
            sqls.append("SELECT 1")
            outcomes.append(make_outcome([(1,)]))
            lab_enum.append(Label.CORRECT)
            scores.append(CandidateScore(i, 1.0))
        elif lab == "I":
            sqls.append(f"SELECT {100 + i}")
            outcomes.append(make_outcome([(100 + i,)]))
            lab_enum.append(Label.INCORRECT)
            scores.append(CandidateScore(i, 0.0))
        else:  # "D"
            sqls.append("")
            outcomes.append(make_outcome(error="bad"))
            lab_enum.append(Label.DISCARDED)
            scores.append(CandidateScore(i, 0.0))
    return QuestionRecord(
        question_id=qid,
        difficulty=difficulty,
        pool=make_pool(qid, sqls),
        outcomes=tuple(outcomes),
        labels=tuple(lab_enum),
        scores=tuple(scores),
    )


ALL = list(Strategy)


class TestRounding:
    def test_half_up(self):
        assert round_pct(63.885) == 63.89
        assert round_pct(63.884) == 63.88
        assert round_pct(0.005) == 0.01

    def test_exact_values_untouched(self):
        assert round_pct(50.0) == 50.0


class TestQuestionEval:
    def test_pass_bits_must_be_monotone(self):
        with pytest.raises(ValueError):
            QuestionEval("q", Difficulty.SIMPLE, {}, (True, False))

    def test_ragged_record_rejected(self):
        rec = make_record("q", "CI")
        with pytest.raises(ValueError):
            QuestionRecord(
                question_id="q", difficulty=rec.difficulty, pool=rec.pool,
                outcomes=rec.outcomes[:1], labels=rec.labels, scores=rec.scores,
            )


class TestDeriveSeed:
    def test_stable(self):
        assert derive_seed(42, 4, "q1") == derive_seed(42, 4, "q1")

    def test_sensitive_to_each_input(self):
        base = derive_seed(42, 4, "q1")
        assert derive_seed(43, 4, "q1") != base
        assert derive_seed(42, 5, "q1") != base
        assert derive_seed(42, 4, "q2") != base


class TestEvaluateQuestion:
    def test_prefix_limits_visibility(self):
        # correct candidate sits at index 3; with n=2 nothing can find it
        rec = make_record("q", "IICI")
        correctness, _ = evaluate_question(rec, 2, 42, ALL)
        assert not any(correctness.values())
        correctness4, _ = evaluate_question(rec, 4, 42, ALL)
        assert correctness4[Strategy.ORM_BON.value]

    def test_baseline_uses_index_zero(self):
        rec = make_record("q", "CI")
        correctness, selections = evaluate_question(rec, 2, 42, ALL)
        assert selections[Strategy.BASELINE_FIRST.value].chosen_index == 0
        assert correctness[Strategy.BASELINE_FIRST.value]


class TestAggregates:
    def test_execution_accuracy_arithmetic(self):
        evals = build_evals(
            [make_record("a", "C"), make_record("b", "I"), make_record("c", "I")],
            1, 42, ALL,
        )
        assert execution_accuracy(evals, Strategy.BASELINE_FIRST) == round_pct(100 / 3)

    def test_pass_at_n_prefix_semantics(self):
        evals = build_evals([make_record("a", "IIC"), make_record("b", "III")],
                            3, 42, ALL)
        assert pass_at_n(evals, 1) == 0.0
        assert pass_at_n(evals, 2) == 0.0
        assert pass_at_n(evals, 3) == 50.0

    def test_pass_at_n_out_of_range(self):
        evals = build_evals([make_record("a", "C")], 1, 42, ALL)
        with pytest.raises(ValueError):
            pass_at_n(evals, 2)

    def test_empty_eval_set_rejected(self):
        with pytest.raises(ValueError):
            execution_accuracy([], Strategy.MAJORITY)

    def test_stratification_includes_total(self):
        evals = build_evals(
            [make_record("a", "C", Difficulty.SIMPLE),
             make_record("b", "I", Difficulty.MODERATE),
             make_record("c", "C", Difficulty.MODERATE)],
            1, 42, ALL,
        )
        strata = stratify_by_difficulty(evals, Strategy.BASELINE_FIRST)
        assert strata["Simple"] == 100.0
        assert strata["Moderate"] == 50.0
        assert strata["Total"] == round_pct(200 / 3)

    @given(st.lists(st.sampled_from(["C", "I", "D"]), min_size=4, max_size=4),
           st.integers(0, 500))
    @settings(max_examples=100)
    def test_ex_never_exceeds_pass(self, labels, seed):
        records = [make_record("q", "".join(labels))]
        for n in (1, 2, 4):
            evals = build_evals(records, n, seed, ALL)
            p = pass_at_n(evals, n)
            for strategy in ALL:
                assert execution_accuracy(evals, strategy) <= p


class TestSweep:
    RECORDS = [
        make_record("a", "ICIC"),
        make_record("b", "IIII"),
        make_record("c", "CIII"),
        make_record("d", "DDIC"),
    ]

    def test_rows_cover_grid(self):
        rows = n_sweep(self.RECORDS, [1, 2, 4], 42)
        assert {(r.n, r.strategy) for r in rows} == {
            (n, s) for n in (1, 2, 4) for s in Strategy
        }

    def test_matches_bruteforce_recomputation(self):
        # Derived oracle: recompute each cell directly from the records.
        rows = n_sweep(self.RECORDS, [1, 2, 4], seed=42)
        for row in rows:
            evals = build_evals(self.RECORDS, row.n, 42, [row.strategy])
            assert row.ex_total == execution_accuracy(evals, row.strategy)
            assert row.pass_at_n == pass_at_n(evals, row.n)

    def test_pass_at_n_monotone_in_n(self):
        rows = n_sweep(self.RECORDS, [1, 2, 3, 4], 42)
        by_n = sorted({(r.n, r.pass_at_n) for r in rows})
        values = [v for _, v in by_n]
        assert values == sorted(values)

    def test_n1_identical_across_strategies(self):
        rows = [r for r in n_sweep(self.RECORDS, [1], 42)]
        assert len({r.ex_total for r in rows}) == 1

    def test_pool_too_small_rejected(self):
        with pytest.raises(ValueError):
            n_sweep(self.RECORDS, [8], 42)

    def test_per_row_reproducibility(self):
        # a single-n sweep reproduces the same row as the full sweep
        full = n_sweep(self.RECORDS, [1, 2, 4], 42)
        solo = n_sweep(self.RECORDS, [2], 42)
        full_n2 = [r for r in full if r.n == 2]
        assert full_n2 == solo

    def test_csv_shape(self):
        rows = n_sweep(self.RECORDS, [1, 2], 42)
        text = sweep_to_csv(rows)
        lines = text.splitlines()
        assert lines[0] == "n,strategy,ex_total,ex_simple,ex_moderate,ex_challenging,pass_at_n"
        assert len(lines) == 1 + len(rows)
        assert all(line.count(",") == 6 for line in lines)
