import pytest
from hypothesis import given, strategies as st

from sqlrank.corpus import BenchmarkQuestion, SchemaText
from sqlrank.generation import (
    CandidatePool,
    CandidateQuery,
    GenerationConfig,
    PoolFormatError,
    SamplingError,
    extract_sql,
    load_pools,
    render_generation_prompt,
    sample_candidates,
    save_pools,
)

from conftest import StubServer, make_pool


SCHEMA = SchemaText(db_id="shop", ddl="CREATE TABLE users (id INTEGER);")
QUESTION = BenchmarkQuestion(
    id="q1", db_id="shop", text="How many users?", gold_sql="SELECT COUNT(*) FROM users"
)


class TestPrompt:
    def test_contains_schema_and_question_verbatim(self):
        prompt = render_generation_prompt(SCHEMA, QUESTION)
        assert SCHEMA.ddl in prompt
        assert QUESTION.text in prompt

    def test_evidence_appended_after_question(self):
        q = BenchmarkQuestion(
            id="q2", db_id="shop", text="How many?", gold_sql="SELECT 1",
            evidence="users means rows of users",
        )
        prompt = render_generation_prompt(SCHEMA, q)
        assert "How many?\nEvidence: users means rows of users" in prompt

    def test_db_mismatch_rejected(self):
        other = SchemaText(db_id="school", ddl="CREATE TABLE s (x);")
        with pytest.raises(ValueError):
            render_generation_prompt(other, QUESTION)

    def test_deterministic(self):
        assert render_generation_prompt(SCHEMA, QUESTION) == render_generation_prompt(
            SCHEMA, QUESTION
        )


class TestExtractSql:
    def test_last_fenced_block_wins(self):
        raw = (
            "First try:\n```sql\nSELECT 1\n```\n"
            "Actually:\n```sql\nSELECT 2\n```\n"
        )
        assert extract_sql(raw) == "SELECT 2"

    def test_fence_language_tag_optional(self):
        assert extract_sql("```\nSELECT 1\n```") == "SELECT 1"

    def test_bare_select_fallback_takes_last(self):
        raw = "Maybe SELECT 1 FROM a; no, SELECT 2 FROM b; done"
        assert extract_sql(raw) == "SELECT 2 FROM b"

    def test_with_keyword_starts_fallback(self):
        raw = "Answer: WITH t AS (VALUES (1)) TABLE t"
        assert extract_sql(raw).startswith("WITH t AS")

    def test_fallback_stops_at_statement_end(self):
        assert extract_sql("run SELECT 1 FROM a; thanks") == "SELECT 1 FROM a"

    def test_no_sql_gives_empty(self):
        assert extract_sql("I cannot answer this question.") == ""

    @given(st.text(max_size=200))
    def test_never_contains_fence_or_raises(self, raw):
        sql = extract_sql(raw)
        assert "```" not in sql


class TestPoolRoundTrip:
    def test_save_load_identity(self, tmp_path):
        pools = [make_pool("qa", ["SELECT 1", "SELECT 2"]),
                 make_pool("qb", ["SELECT 3", "SELECT 4"])]
        path = tmp_path / "pools.jsonl"
        save_pools(pools, path)
        loaded = load_pools(path, expect_n=2)
        assert loaded == pools

    def test_strict_size_mismatch_raises(self, tmp_path):
        path = tmp_path / "pools.jsonl"
        save_pools([make_pool("qa", ["SELECT 1"])], path)
        with pytest.raises(PoolFormatError):
            load_pools(path, expect_n=4)

    def test_gapped_indices_raise(self, tmp_path):
        path = tmp_path / "pools.jsonl"
        save_pools([make_pool("qa", ["SELECT 1", "SELECT 2"])], path)
        lines = path.read_text().splitlines()
        path.write_text(lines[1] + "\n")  # keep only index 1
        with pytest.raises(PoolFormatError):
            load_pools(path)

    def test_malformed_line_raises(self, tmp_path):
        path = tmp_path / "pools.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(PoolFormatError):
            load_pools(path)

    def test_pool_indices_validated(self):
        with pytest.raises(ValueError):
            CandidatePool(
                question_id="q",
                candidates=(CandidateQuery(index=3, sql="SELECT 1",
                                           raw_completion=""),),
            )

    def test_prefix_semantics(self):
        pool = make_pool("q", ["SELECT 1", "SELECT 2", "SELECT 3"])
        assert [c.sql for c in pool.prefix(2).candidates] == ["SELECT 1", "SELECT 2"]
        with pytest.raises(ValueError):
            pool.prefix(0)
        with pytest.raises(ValueError):
            pool.prefix(4)


class TestGenerationConfig:
    def test_n1_forces_greedy(self):
        cfg = GenerationConfig(n_candidates=1, temperature=0.8)
        assert cfg.effective_temperature == 0.0

    def test_temperature_kept_otherwise(self):
        cfg = GenerationConfig(n_candidates=8, temperature=0.8)
        assert cfg.effective_temperature == 0.8

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            GenerationConfig(n_candidates=0)
        with pytest.raises(ValueError):
            GenerationConfig(temperature=-0.1)


class TestSampleCandidates:
    def _ok_payload(self, body):
        seed = body.get("seed")
        return 200, {"choices": [{"message": {"content": f"```sql\nSELECT {seed}\n```"}}]}

    def test_n_completions_in_seed_order(self):
        with StubServer(lambda path, body: self._ok_payload(body)) as stub:
            cfg = GenerationConfig(
                n_candidates=4, seed=100, endpoint_url=f"{stub.url}/v1",
                request_timeout_secs=5,
            )
            completions = sample_candidates("prompt", cfg)
        assert completions == [f"```sql\nSELECT {100 + i}\n```" for i in range(4)]

    def test_persistent_failure_raises_after_retries(self):
        with StubServer(lambda path, body: (500, {"error": "boom"})) as stub:
            cfg = GenerationConfig(
                n_candidates=1, seed=1, endpoint_url=f"{stub.url}/v1",
                max_retries=2, request_timeout_secs=5,
            )
            with pytest.raises(SamplingError):
                sample_candidates("prompt", cfg)
            assert len(stub.requests) == 2
