"""Benchmark loading, question de-duplication, and schema serialization.

Supports the BIRD/Spider distribution layouts: a JSON question file plus a
databases directory holding one SQLite file per database id.
"""
from __future__ import annotations

import json
import logging
import re
import sqlite3
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

log = logging.getLogger(__name__)


class Difficulty(str, Enum):
    SIMPLE = "Simple"
    MODERATE = "Moderate"
    CHALLENGING = "Challenging"
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, raw: str | None) -> "Difficulty":
        if not raw:
            return cls.UNKNOWN
        normalized = raw.strip().casefold()
        for member in cls:
            if member.value.casefold() == normalized:
                return member
        return cls.UNKNOWN


@dataclass(frozen=True)
class DatabaseRef:
    db_id: str
    path: Path

    def __post_init__(self) -> None:
        if not Path(self.path).is_file():
            raise FileNotFoundError(f"database file not found: {self.path}")


@dataclass(frozen=True)
class BenchmarkQuestion:
    id: str
    text: str
    db_id: str
    gold_sql: str
    difficulty: Difficulty = Difficulty.UNKNOWN
    evidence: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"question {self.id}: empty text")
        if not self.gold_sql.strip():
            raise ValueError(f"question {self.id}: empty gold SQL")


@dataclass(frozen=True)
class SchemaText:
    db_id: str
    ddl: str

    def __post_init__(self) -> None:
        if not self.ddl.strip():
            raise ValueError(f"schema for {self.db_id} is empty")


class BenchmarkFormatError(ValueError):
    """Raised when the question file or a record in it is malformed."""


_QUESTION_FILE_CANDIDATES = {
    "train": ["train.json", "train_spider.json", "train/train.json"],
    "dev": ["dev.json", "dev/dev.json"],
    "test": ["test.json", "test/test.json"],
}

_DB_DIR_CANDIDATES = {
    "train": ["train_databases", "database", "databases", "train/train_databases"],
    "dev": ["dev_databases", "database", "databases", "dev/dev_databases"],
    "test": ["test_databases", "database", "databases", "test/test_databases"],
}


def _first_existing(root: Path, names: list[str]) -> Path | None:
    for name in names:
        candidate = root / name
        if candidate.exists():
            return candidate
    return None


def find_database(db_root: Path, db_id: str) -> DatabaseRef:
    return DatabaseRef(db_id=db_id, path=db_root / db_id / f"{db_id}.sqlite")


def load_benchmark(dataset_root: Path | str, split: str) -> list[BenchmarkQuestion]:
    """Load one split of a benchmark distribution.

    Returns one question per source record in file order. Questions whose
    database file cannot be found are dropped with a warning. Difficulty is
    mapped from the source field when present, else Unknown.
    """
    root = Path(dataset_root)
    if split not in _QUESTION_FILE_CANDIDATES:
        raise BenchmarkFormatError(f"unknown split {split!r}")
    question_file = _first_existing(root, _QUESTION_FILE_CANDIDATES[split])
    if question_file is None:
        raise FileNotFoundError(
            f"no question file for split {split!r} under {root} "
            f"(tried {_QUESTION_FILE_CANDIDATES[split]})"
        )
    db_root = _first_existing(root, _DB_DIR_CANDIDATES[split])
    if db_root is None:
        raise FileNotFoundError(
            f"no databases directory for split {split!r} under {root} "
            f"(tried {_DB_DIR_CANDIDATES[split]})"
        )

    try:
        records = json.loads(question_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BenchmarkFormatError(f"{question_file}: invalid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise BenchmarkFormatError(f"{question_file}: expected a JSON array")
    if not records:
        log.warning("question file %s is empty", question_file)
        return []

    questions: list[BenchmarkQuestion] = []
    for i, record in enumerate(records):
        try:
            question = _parse_record(record, i)
        except (KeyError, TypeError, ValueError) as exc:
            raise BenchmarkFormatError(f"{question_file}: record {i}: {exc}") from exc
        try:
            find_database(db_root, question.db_id)
        except FileNotFoundError:
            log.warning(
                "dropping question %s: database %r not found under %s",
                question.id, question.db_id, db_root,
            )
            continue
        questions.append(question)
    return questions


def _parse_record(record: dict, index: int) -> BenchmarkQuestion:
    if not isinstance(record, dict):
        raise TypeError(f"expected object, got {type(record).__name__}")
    text = record.get("question")
    if text is None:
        raise KeyError("question")
    db_id = record.get("db_id")
    if db_id is None:
        raise KeyError("db_id")
    gold = record.get("SQL") or record.get("query") or record.get("gold_sql")
    if gold is None:
        raise KeyError("SQL/query/gold_sql")
    qid = record.get("question_id")
    qid = str(qid) if qid is not None else str(index)
    return BenchmarkQuestion(
        id=qid,
        text=text,
        db_id=db_id,
        gold_sql=gold,
        difficulty=Difficulty.parse(record.get("difficulty")),
        evidence=record.get("evidence") or "",
    )


_WS = re.compile(r"\s+")


def dedup_key(question: BenchmarkQuestion) -> tuple[str, str]:
    """(db_id, whitespace-collapsed case-folded text)."""
    return question.db_id, _WS.sub(" ", question.text.strip()).casefold()


def deduplicate_questions(
    questions: list[BenchmarkQuestion],
) -> tuple[list[BenchmarkQuestion], int]:
    """Keep the first occurrence of each dedup key, preserving order."""
    seen: set[tuple[str, str]] = set()
    kept: list[BenchmarkQuestion] = []
    for question in questions:
        key = dedup_key(question)
        if key in seen:
            continue
        seen.add(key)
        kept.append(question)
    return kept, len(questions) - len(kept)


_SQL_COMMENT = re.compile(r"--[^\n]*|/\*.*?\*/", re.DOTALL)


def serialize_schema(db: DatabaseRef) -> SchemaText:
    """Render the database's CREATE TABLE statements, catalog order.

    Comments are stripped; output is a pure function of the file bytes.
    """
    uri = f"file:{db.path}?mode=ro"
    try:
        con = sqlite3.connect(uri, uri=True)
    except sqlite3.Error as exc:
        raise OSError(f"cannot open database {db.path}: {exc}") from exc
    try:
        try:
            rows = con.execute(
                "SELECT sql FROM sqlite_master"
                " WHERE type = 'table' AND name NOT LIKE 'sqlite_%'"
                " AND sql IS NOT NULL"
            ).fetchall()
        except sqlite3.Error as exc:
            raise OSError(f"corrupt or unreadable database {db.path}: {exc}") from exc
    finally:
        con.close()

    blocks = []
    for (sql,) in rows:
        stripped = _SQL_COMMENT.sub("", sql)
        stripped = "\n".join(
            line.rstrip() for line in stripped.splitlines() if line.strip()
        )
        blocks.append(stripped.rstrip(";") + ";")
    return SchemaText(db_id=db.db_id, ddl="\n\n".join(blocks))
