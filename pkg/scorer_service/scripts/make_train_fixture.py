#!/usr/bin/env python3
"""Freeze the balanced 200-example training fixture.

Takes the first 25 questions of the bundled mini corpus and emits 4 Yes +
4 No records per question in the labeled-dataset record format. Yes
records are the gold query and result-preserving wrappings of it; No
records are the hand-authored wrong queries and their wrappings. Every
record's label is verified here by executing candidate and gold against
the real database and comparing canonical result sets, so the file cannot
drift out of sync with the databases.
"""
from __future__ import annotations

import json
import re
import sqlite3
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
MINI_CORPUS = HERE.parent.parent / "tests" / "fixtures" / "mini_corpus"
OUT = HERE.parent / "tests" / "fixtures" / "train_dataset.jsonl"

N_QUESTIONS = 25
_COMMENT = re.compile(r"--[^\n]*|/\*.*?\*/", re.DOTALL)


def schema_ddl(db_path: Path) -> str:
    con = sqlite3.connect(f"file:{db_path}?mode=ro", uri=True)
    rows = con.execute(
        "SELECT sql FROM sqlite_master WHERE type = 'table'"
        " AND name NOT LIKE 'sqlite_%' AND sql IS NOT NULL"
    ).fetchall()
    con.close()
    blocks = []
    for (sql,) in rows:
        stripped = _COMMENT.sub("", sql)
        stripped = "\n".join(
            line.rstrip() for line in stripped.splitlines() if line.strip()
        )
        blocks.append(stripped.rstrip(";") + ";")
    return "\n\n".join(blocks)


def canonical(db_path: Path, sql: str):
    con = sqlite3.connect(f"file:{db_path}?mode=ro", uri=True)
    try:
        cur = con.execute(sql)
        cols = len(cur.description)
        rows = cur.fetchall()
    finally:
        con.close()

    def cell(v):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        return v

    return cols, frozenset(tuple(cell(c) for c in row) for row in rows)


def wrong_sqls_by_question() -> dict[str, list[str]]:
    """Two distinct Incorrect-labeled candidate queries per question."""
    labels = {}
    for line in (MINI_CORPUS / "expected_labels.jsonl").read_text().splitlines():
        record = json.loads(line)
        labels[(record["question_id"], record["index"])] = record["label"]
    wrongs: dict[str, list[str]] = {}
    for line in (MINI_CORPUS / "pools.jsonl").read_text().splitlines():
        record = json.loads(line)
        qid = record["question_id"]
        if labels.get((qid, record["index"])) != "Incorrect":
            continue
        bucket = wrongs.setdefault(qid, [])
        if record["sql"] not in bucket:
            bucket.append(record["sql"])
    return wrongs


def main() -> int:
    questions = json.loads((MINI_CORPUS / "dev.json").read_text())
    wrongs_by_qid = wrong_sqls_by_question()
    ddl_by_db: dict[str, str] = {}
    records = []
    n_used = 0
    for q in questions:
        if n_used == N_QUESTIONS:
            break
        wrongs = wrongs_by_qid.get(str(q["question_id"]), [])
        if len(wrongs) < 2:
            continue
        n_used += 1
        db_id = q["db_id"]
        db_path = MINI_CORPUS / "dev_databases" / db_id / f"{db_id}.sqlite"
        if db_id not in ddl_by_db:
            ddl_by_db[db_id] = schema_ddl(db_path)
        gold = q["SQL"]
        yes_sqls = [
            gold,
            f"SELECT * FROM ({gold})",
            f"SELECT * FROM ({gold}) WHERE 1 = 1",
            f"SELECT * FROM (SELECT * FROM ({gold}))",
        ]
        no_sqls = [
            wrongs[0],
            wrongs[1],
            f"SELECT * FROM ({wrongs[0]})",
            f"SELECT * FROM ({wrongs[1]})",
        ]
        gold_result = canonical(db_path, gold)
        for sql, label in [(s, "Yes") for s in yes_sqls] + [
            (s, "No") for s in no_sqls
        ]:
            actual = canonical(db_path, sql)
            verified = "Yes" if actual == gold_result else "No"
            if verified != label:
                print(
                    f"label mismatch for {q['question_id']}: {sql!r} "
                    f"expected {label}, execution says {verified}",
                    file=sys.stderr,
                )
                return 1
            records.append({
                "question_id": str(q["question_id"]),
                "db_id": db_id,
                "schema_ddl": ddl_by_db[db_id],
                "question": q["question"],
                "sql": sql,
                "label": label,
                "prompt_variant": "SqlOnly",
            })
    with OUT.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    labels = [r["label"] for r in records]
    print(f"wrote {len(records)} records "
          f"({labels.count('Yes')} Yes / {labels.count('No')} No) to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
