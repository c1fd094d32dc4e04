#!/usr/bin/env python3
"""Freeze golden prompt files for the template-fidelity tests.

Renders the generation prompt and the four verification prompt variants
with fixed toy inputs and writes them under tests/fixtures/golden_prompts/.
Inspect the output by eye before committing: the golden files are the
reference the renderer is held to.
"""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from sqlrank.corpus import BenchmarkQuestion, Difficulty, SchemaText
from sqlrank.generation import render_generation_prompt
from sqlrank.scoring import PromptVariant, ScoreRequest, render_verification_prompt

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden_prompts"

SCHEMA = SchemaText(db_id="toy", ddl="CREATE TABLE users (id INTEGER, name TEXT);")
QUESTION = BenchmarkQuestion(
    id="toy0",
    text="How many users are there?",
    db_id="toy",
    gold_sql="SELECT COUNT(*) FROM users",
    difficulty=Difficulty.SIMPLE,
    evidence="",
)
SQL = "SELECT COUNT(*) FROM users"
DATA = "COUNT(*)\n3"


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "generation.txt").write_text(
        render_generation_prompt(SCHEMA, QUESTION), encoding="utf-8"
    )
    for variant in PromptVariant:
        prompt = render_verification_prompt(ScoreRequest(
            schema_ddl=SCHEMA.ddl,
            question_text=QUESTION.text,
            candidate_sql=SQL,
            variant=variant,
            result_preview=DATA,
        ))
        (OUT / f"verification_{variant.value}.txt").write_text(
            prompt, encoding="utf-8"
        )
    print(f"wrote golden prompts under {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
