from __future__ import annotations

import json
import sqlite3
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from sqlrank.corpus import DatabaseRef
from sqlrank.generation import CandidatePool, CandidateQuery
from sqlrank.sqlexec import ExecutionOutcome, canonicalize_result

FIXTURES = Path(__file__).parent / "fixtures"
MINI_CORPUS = FIXTURES / "mini_corpus"
GOLDEN_PROMPTS = FIXTURES / "golden_prompts"


@pytest.fixture
def tiny_db(tmp_path) -> DatabaseRef:
    """Single-table database t(a INTEGER) with rows 1, 2, 3."""
    path = tmp_path / "tiny.sqlite"
    con = sqlite3.connect(path)
    con.execute("CREATE TABLE t (a INTEGER)")
    con.executemany("INSERT INTO t VALUES (?)", [(1,), (2,), (3,)])
    con.commit()
    con.close()
    return DatabaseRef(db_id="tiny", path=path)


def make_result(rows, n_columns=None):
    """ResultSet helper: rows is a list of tuples."""
    if n_columns is None:
        n_columns = len(rows[0]) if rows else 1
    columns = tuple(f"c{i}" for i in range(n_columns))
    return canonicalize_result(columns, rows)


def make_outcome(rows=None, error=None, timeout=False, n_columns=None):
    if timeout:
        return ExecutionOutcome.timeout()
    if error is not None:
        return ExecutionOutcome.error(error)
    return ExecutionOutcome.ok(make_result(rows or [], n_columns))


def make_pool(question_id: str, sqls: list[str]) -> CandidatePool:
    return CandidatePool(
        question_id=question_id,
        candidates=tuple(
            CandidateQuery(index=i, sql=sql, raw_completion=f"```sql\n{sql}\n```")
            for i, sql in enumerate(sqls)
        ),
    )


class _StubHandler(BaseHTTPRequestHandler):
    """Minimal OpenAI-style completions stub, scriptable per server."""

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        self.server.requests.append((self.path, body))
        status, payload = self.server.respond(self.path, body)
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class StubServer:
    """HTTP stub; `respond` is a (path, body) -> (status, payload) callable."""

    def __init__(self, respond):
        self.server = HTTPServer(("127.0.0.1", 0), _StubHandler)
        self.server.requests = []
        self.server.respond = respond
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self.server.requests
