"""Verification prompt rendering for the labeled-dataset record format.

Dataset records arrive as {question_id, db_id, schema_ddl, question, sql,
label, prompt_variant, result_preview?}. The templates below define the
prompt text the scoring client sends over the wire; training must render
the same bytes so train- and serve-time inputs agree.
"""
from __future__ import annotations

SQL_ONLY = "SqlOnly"
DATA_ONLY = "DataOnly"
DATA_PLUS_SQL = "DataPlusSql"
INSTRUCTION = "Instruction"

VARIANTS = (SQL_ONLY, DATA_ONLY, DATA_PLUS_SQL, INSTRUCTION)

_SQL_ONLY_TEMPLATE = """\
Question: {context}
SQL: {sql}
Is the SQL correct?"""

_DATA_ONLY_TEMPLATE = """\
Question: {context}
Data retrieved: {data}
Based on data and question, in your opinion is the SQL correct?"""

_DATA_PLUS_SQL_TEMPLATE = """\
Question: {context}
Data: {data}
SQL: {sql}
Is the SQL correct?"""

_INSTRUCTION_TEMPLATE = """\
You are an expert SQL evaluator. Given a database schema, a question, the SQL query and data returned, determine if the SQL query correctly answers the question based on the schema. Respond only with Yes or No.
Input:

Question and database schema: {context}
- SQL Query: {sql}
- Data returned: {data}

Instructions:
1. Analyze the database schema to understand the table structure, columns, and relationships.
2. Evaluate the provided SQL query against the question to determine if it accurately retrieves the intended data.
3. Respond solely with Yes if the SQL query is correct, or No if it is incorrect.
Output:
Yes
or
No
Is the SQL correct?"""


class RecordFormatError(ValueError):
    """Dataset record missing required fields or using an unknown variant."""


def render_prompt(record: dict) -> str:
    """Render one dataset record into its verification prompt."""
    try:
        context = f"{record['schema_ddl']}\n{record['question']}"
        sql = record["sql"]
        variant = record.get("prompt_variant", SQL_ONLY)
    except KeyError as exc:
        raise RecordFormatError(f"record missing field {exc}") from exc
    data = record.get("result_preview") or ""
    if variant == SQL_ONLY:
        return _SQL_ONLY_TEMPLATE.format(context=context, sql=sql)
    if variant == DATA_ONLY:
        return _DATA_ONLY_TEMPLATE.format(context=context, data=data)
    if variant == DATA_PLUS_SQL:
        return _DATA_PLUS_SQL_TEMPLATE.format(context=context, data=data, sql=sql)
    if variant == INSTRUCTION:
        return _INSTRUCTION_TEMPLATE.format(context=context, data=data, sql=sql)
    raise RecordFormatError(f"unknown prompt_variant {variant!r}")
