"""Unit tests: prompt rendering, label-token resolution, truncation,
the low-rank adapter layers, and dataset validation."""
from __future__ import annotations

import json

import pytest
import torch
from torch import nn

from scorer_service.lora import (
    LoRAProjection,
    apply_lora,
    load_adapter,
    lora_parameters,
    save_adapter,
)
from scorer_service.model import ModelScorer, ServiceConfig, resolve_label_token_ids
from scorer_service.prompts import (
    DATA_ONLY,
    DATA_PLUS_SQL,
    INSTRUCTION,
    SQL_ONLY,
    RecordFormatError,
    render_prompt,
)
from scorer_service.train import RecordFormatError as TrainRecordError
from scorer_service.train import TrainConfig, load_training_records, train


def _record(**overrides) -> dict:
    base = {
        "question_id": "q1",
        "db_id": "db",
        "schema_ddl": "CREATE TABLE t (a INTEGER);",
        "question": "How many rows?",
        "sql": "SELECT COUNT(*) FROM t",
        "label": "Yes",
        "prompt_variant": SQL_ONLY,
        "result_preview": "COUNT(*)\n3",
    }
    base.update(overrides)
    return base


class TestRenderPrompt:
    def test_sql_only(self):
        prompt = render_prompt(_record())
        assert prompt == (
            "Question: CREATE TABLE t (a INTEGER);\nHow many rows?\n"
            "SQL: SELECT COUNT(*) FROM t\n"
            "Is the SQL correct?"
        )

    def test_data_only_omits_sql(self):
        prompt = render_prompt(_record(prompt_variant=DATA_ONLY))
        assert "COUNT(*)\n3" in prompt
        assert "SELECT COUNT(*) FROM t" not in prompt

    def test_data_plus_sql_has_both(self):
        prompt = render_prompt(_record(prompt_variant=DATA_PLUS_SQL))
        assert "COUNT(*)\n3" in prompt
        assert "SELECT COUNT(*) FROM t" in prompt

    def test_instruction_has_both_and_instructions(self):
        prompt = render_prompt(_record(prompt_variant=INSTRUCTION))
        assert "expert SQL evaluator" in prompt
        assert "SELECT COUNT(*) FROM t" in prompt
        assert "COUNT(*)\n3" in prompt

    def test_all_variants_end_with_question(self):
        for variant in (SQL_ONLY, DATA_ONLY, DATA_PLUS_SQL, INSTRUCTION):
            assert render_prompt(_record(prompt_variant=variant)).endswith(
                "the SQL correct?"
            )

    def test_variant_defaults_to_sql_only(self):
        record = _record()
        del record["prompt_variant"]
        assert render_prompt(record) == render_prompt(_record())

    def test_missing_field_raises(self):
        record = _record()
        del record["sql"]
        with pytest.raises(RecordFormatError):
            render_prompt(record)

    def test_unknown_variant_raises(self):
        with pytest.raises(RecordFormatError):
            render_prompt(_record(prompt_variant="Riddle"))

    def test_missing_preview_renders_empty(self):
        record = _record(prompt_variant=DATA_ONLY)
        del record["result_preview"]
        assert "Data retrieved: \n" in render_prompt(record)


class TestServiceConfig:
    def test_model_path_required_without_mock(self):
        with pytest.raises(ValueError):
            ServiceConfig()

    def test_mock_needs_no_model(self):
        assert ServiceConfig(mock=True).mock

    def test_tiny_token_budget_rejected(self):
        with pytest.raises(ValueError):
            ServiceConfig(mock=True, max_prompt_tokens=4)


class TestModelScorer:
    def test_label_ids_distinct(self, tiny_base):
        from transformers import AutoTokenizer

        yes_id, no_id = resolve_label_token_ids(AutoTokenizer.from_pretrained(tiny_base))
        assert yes_id != no_id

    def test_probabilities_sum_to_one(self, tiny_base):
        scorer = ModelScorer(tiny_base)
        p_yes, p_no = scorer.yes_probability("SELECT 1 Is the SQL correct ?")
        assert 0.0 <= p_yes <= 1.0
        assert abs(p_yes + p_no - 1.0) <= 1e-6

    def test_batch_matches_singles(self, tiny_base):
        scorer = ModelScorer(tiny_base)
        prompts = ["SELECT 1", "SELECT 2", "Is the SQL correct ?"]
        batch = scorer.yes_probability_batch(prompts)
        singles = [scorer.yes_probability(p) for p in prompts]
        for (by, bn), (sy, sn) in zip(batch, singles):
            assert by == pytest.approx(sy, abs=1e-6)
            assert bn == pytest.approx(sn, abs=1e-6)

    def test_front_truncation_keeps_tail(self, tiny_base):
        # Over budget, the leading (schema) tokens are dropped, so two
        # prompts sharing a long-enough tail score identically.
        scorer = ModelScorer(tiny_base, max_prompt_tokens=8)
        tail = "SQL : SELECT COUNT ( * ) Is the SQL correct ?"
        a = scorer.yes_probability(f"alpha beta gamma {tail}")
        b = scorer.yes_probability(f"delta epsilon {tail}")
        assert a == pytest.approx(b, abs=1e-7)


def _toy_model() -> nn.Sequential:
    torch.manual_seed(0)
    return nn.Sequential(nn.Linear(6, 5), nn.Tanh(), nn.Linear(5, 3))


class TestLoRA:
    def test_zero_init_preserves_output(self):
        model = _toy_model()
        x = torch.randn(4, 6)
        before = model(x)
        n = apply_lora(model, rank=2, alpha=4.0, target_names=("0", "2"))
        assert n == 2
        assert torch.allclose(model(x), before)

    def test_only_adapter_params_trainable(self):
        model = _toy_model()
        apply_lora(model, rank=2, alpha=4.0, target_names=("0",))
        trainable = {n for n, p in model.named_parameters() if p.requires_grad}
        assert trainable == {"0.lora_a", "0.lora_b"}

    def test_nonzero_delta_changes_output(self):
        model = _toy_model()
        x = torch.randn(4, 6)
        apply_lora(model, rank=2, alpha=4.0, target_names=("0", "2"))
        before = model(x)
        with torch.no_grad():
            for p in lora_parameters(model):
                p.add_(0.1)
        assert not torch.allclose(model(x), before)

    def test_no_matching_module_raises(self):
        with pytest.raises(ValueError):
            apply_lora(_toy_model(), rank=2, alpha=4.0, target_names=("missing",))

    def test_scaling_is_alpha_over_rank(self):
        layer = LoRAProjection(nn.Linear(6, 5), rank=2, alpha=8.0)
        assert layer.scaling == pytest.approx(4.0)

    def test_save_load_round_trip(self, tmp_path):
        model = _toy_model()
        x = torch.randn(4, 6)
        apply_lora(model, rank=2, alpha=4.0, target_names=("0", "2"))
        with torch.no_grad():
            for p in lora_parameters(model):
                p.normal_()
        save_adapter(model, tmp_path, rank=2, alpha=4.0, target_names=("0", "2"))
        expected = model(x)

        fresh = _toy_model()
        load_adapter(fresh, tmp_path)
        assert torch.allclose(fresh(x), expected, atol=1e-6)

    def test_adapter_config_written(self, tmp_path):
        model = _toy_model()
        apply_lora(model, rank=2, alpha=4.0, target_names=("0",))
        save_adapter(model, tmp_path, rank=2, alpha=4.0, target_names=("0",))
        config = json.loads((tmp_path / "adapter_config.json").read_text())
        assert config["rank"] == 2
        assert config["alpha"] == 4.0
        assert config["target_names"] == ["0"]


class TestDatasetValidation:
    def test_fixture_loads_clean(self, fixture_records):
        records = load_training_records(
            __file__.replace("test_scorer_unit.py", "fixtures/train_dataset.jsonl")
        )
        assert len(records) == 200
        assert {r["label"] for r in records} == {"Yes", "No"}
        assert records == fixture_records

    def test_bad_label_rejected_before_training(self, tmp_path, tiny_base, fixture_records):
        records = [dict(r) for r in fixture_records[:4]]
        records[2]["label"] = "Maybe"
        dataset = tmp_path / "bad.jsonl"
        dataset.write_text("".join(json.dumps(r) + "\n" for r in records))
        with pytest.raises(TrainRecordError):
            load_training_records(dataset)
        out = tmp_path / "adapter"
        with pytest.raises(TrainRecordError):
            train(
                TrainConfig(
                    dataset_path=str(dataset),
                    base_model_path=tiny_base,
                    output_dir=str(out),
                )
            )
        assert not out.exists() or not any(out.iterdir())

    def test_missing_field_rejected(self, tmp_path, fixture_records):
        record = dict(fixture_records[0])
        del record["schema_ddl"]
        dataset = tmp_path / "bad.jsonl"
        dataset.write_text(json.dumps(record) + "\n")
        with pytest.raises(TrainRecordError):
            load_training_records(dataset)

    def test_invalid_json_rejected(self, tmp_path):
        dataset = tmp_path / "bad.jsonl"
        dataset.write_text("{not json}\n")
        with pytest.raises(TrainRecordError):
            load_training_records(dataset)
