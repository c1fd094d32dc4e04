"""Read-only SQL execution with timeout, plus result-set canonicalization.

Execution equivalence uses set semantics over typed row tuples: row order
and duplicate rows are ignored, within-row column order matters, column
names do not. Integral reals unify with integers (1.0 == 1); otherwise
comparison is exact, with no epsilon tolerance. This mirrors the official
BIRD execution-accuracy comparison and is load-bearing for labels.
"""
from __future__ import annotations

import sqlite3
import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Sequence

from .corpus import DatabaseRef

DEFAULT_TIMEOUT_SECS = 30.0

Cell = Any  # None | int | float | str | bytes


class RaggedRowsError(ValueError):
    """Row data where some row's width differs from the column count."""


def _canonical_cell(value: Cell) -> Cell:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


_TYPE_RANK = {type(None): 0, int: 1, float: 1, str: 2, bytes: 3}


def _cell_sort_key(value: Cell) -> tuple:
    rank = _TYPE_RANK.get(type(value), 4)
    if value is None:
        return (rank, "")
    if isinstance(value, (int, float)):
        return (rank, float(value), repr(value))
    return (rank, repr(value))


def _row_sort_key(row: tuple) -> tuple:
    return tuple(_cell_sort_key(cell) for cell in row)


@dataclass(frozen=True)
class ResultSet:
    columns: tuple[str, ...]
    rows: frozenset[tuple]

    def sorted_rows(self) -> list[tuple]:
        """Rows in the canonical total order (deterministic across runs)."""
        return sorted(self.rows, key=_row_sort_key)

    @property
    def n_rows(self) -> int:
        return len(self.rows)


class OutcomeKind(str, Enum):
    OK = "ok"
    ERROR = "error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class ExecutionOutcome:
    kind: OutcomeKind
    result: ResultSet | None = None
    message: str = ""

    @classmethod
    def ok(cls, result: ResultSet) -> "ExecutionOutcome":
        return cls(OutcomeKind.OK, result=result)

    @classmethod
    def error(cls, message: str) -> "ExecutionOutcome":
        if not message:
            raise ValueError("error outcome requires a message")
        return cls(OutcomeKind.ERROR, message=message)

    @classmethod
    def timeout(cls) -> "ExecutionOutcome":
        return cls(OutcomeKind.TIMEOUT)

    @property
    def is_ok(self) -> bool:
        return self.kind is OutcomeKind.OK


def canonicalize_result(
    columns: Sequence[str], rows: Iterable[Sequence[Cell]]
) -> ResultSet:
    """Collapse raw row data to the canonical set-of-typed-tuples form."""
    columns = tuple(columns)
    canonical = set()
    for row in rows:
        if len(row) != len(columns):
            raise RaggedRowsError(
                f"row has {len(row)} cells, expected {len(columns)}"
            )
        canonical.add(tuple(_canonical_cell(cell) for cell in row))
    return ResultSet(columns=columns, rows=frozenset(canonical))


def result_sets_equal(a: ResultSet, b: ResultSet) -> bool:
    """Equality over canonical row sets; column names are ignored."""
    return len(a.columns) == len(b.columns) and a.rows == b.rows


def execute_query(
    db: DatabaseRef, sql: str, timeout_secs: float = DEFAULT_TIMEOUT_SECS
) -> ExecutionOutcome:
    """Run one row-returning statement read-only, with a wall-clock budget.

    Never raises: syntax/runtime failures come back as Error, budget
    exhaustion as Timeout. Statements that return no rows (DDL, writes)
    are rejected as Error; the database file is opened mode=ro so it can
    never be modified.
    """
    if timeout_secs <= 0:
        raise ValueError("timeout must be positive")
    if not sql.strip():
        return ExecutionOutcome.error("empty SQL")

    try:
        con = sqlite3.connect(f"file:{db.path}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        return ExecutionOutcome.error(f"cannot open database: {exc}")

    timer = threading.Timer(timeout_secs, con.interrupt)
    start = time.monotonic()
    timer.start()
    try:
        cur = con.execute(sql)
        if cur.description is None:
            return ExecutionOutcome.error(
                "statement returns no rows; only row-returning queries are valid"
            )
        columns = tuple(d[0] for d in cur.description)
        rows = cur.fetchall()
        return ExecutionOutcome.ok(canonicalize_result(columns, rows))
    except (sqlite3.Error, OverflowError, RecursionError) as exc:
        elapsed = time.monotonic() - start
        if elapsed >= timeout_secs and "interrupt" in str(exc).lower():
            return ExecutionOutcome.timeout()
        return ExecutionOutcome.error(f"{type(exc).__name__}: {exc}")
    finally:
        timer.cancel()
        con.close()
