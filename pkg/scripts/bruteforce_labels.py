#!/usr/bin/env python3
"""Independent brute-force labeler for the mini-corpus fixture.

Deliberately does NOT import the sqlrank package: it opens the fixture
databases with the sqlite3 stdlib module directly, normalizes rows on its
own, and compares result sets from first principles. Its output is frozen
at tests/fixtures/mini_corpus/expected_labels.jsonl and serves as the
oracle the labeling pipeline is checked against.

Comparison rule: sets of row tuples (duplicates and row order ignored),
column count must match, column names ignored, floats that are whole
numbers compare equal to the corresponding integers.
"""
from __future__ import annotations

import json
import sqlite3
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "fixtures" / "mini_corpus"


def run(db_path: Path, sql: str):
    """Returns (n_columns, set of normalized row tuples) or None on failure."""
    if not sql.strip():
        return None
    try:
        con = sqlite3.connect(f"file:{db_path}?mode=ro", uri=True)
        try:
            cur = con.execute(sql)
            if cur.description is None:
                return None
            n_columns = len(cur.description)
            rows = {
                tuple(
                    int(cell) if isinstance(cell, float) and cell == int(cell)
                    else cell
                    for cell in row
                )
                for row in cur.fetchall()
            }
            return n_columns, rows
        finally:
            con.close()
    except sqlite3.Error:
        return None


def main() -> int:
    questions = json.loads((CORPUS / "dev.json").read_text(encoding="utf-8"))
    pools: dict[str, list[dict]] = {}
    with (CORPUS / "pools.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            pools.setdefault(record["question_id"], []).append(record)

    out_path = CORPUS / "expected_labels.jsonl"
    counts = {"Correct": 0, "Incorrect": 0, "Discarded": 0}
    with out_path.open("w", encoding="utf-8") as out:
        for question in questions:
            qid = question["question_id"]
            db_id = question["db_id"]
            db_path = CORPUS / "dev_databases" / db_id / f"{db_id}.sqlite"
            gold = run(db_path, question["SQL"])
            if gold is None:
                raise SystemExit(f"gold SQL for {qid} does not execute")
            for record in sorted(pools[qid], key=lambda r: r["index"]):
                candidate = run(db_path, record["sql"])
                if candidate is None:
                    label = "Discarded"
                elif candidate == gold:
                    label = "Correct"
                else:
                    label = "Incorrect"
                counts[label] += 1
                out.write(json.dumps({
                    "question_id": qid,
                    "index": record["index"],
                    "label": label,
                }, sort_keys=True) + "\n")
    print(f"wrote {out_path}: {counts}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
