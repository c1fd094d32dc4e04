#!/usr/bin/env python3
"""Author the bundled mini-corpus fixture.

Builds three small SQLite databases, 30 questions with gold SQL, and a
hand-crafted pool of 8 candidates per question (correct variants, wrong
but executable queries, empty-result queries, syntax errors, and
completions with no extractable SQL). Candidate positions are shuffled
per question with a fixed seed so correct answers land at varied indices.

Output layout (checked into the repo):
    tests/fixtures/mini_corpus/dev.json
    tests/fixtures/mini_corpus/dev_databases/<db_id>/<db_id>.sqlite
    tests/fixtures/mini_corpus/pools.jsonl

Run scripts/bruteforce_labels.py afterwards to refresh the expected
labels file.
"""
from __future__ import annotations

import json
import random
import re
import sqlite3
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "fixtures" / "mini_corpus"

SHOP_DDL = """
CREATE TABLE customers (id INTEGER PRIMARY KEY, name TEXT, city TEXT);
CREATE TABLE orders (id INTEGER PRIMARY KEY, customer_id INTEGER,
                     amount REAL, status TEXT,
                     FOREIGN KEY (customer_id) REFERENCES customers(id));
"""
SHOP_DATA = {
    "customers": [
        (1, "Alice", "Rome"), (2, "Bob", "Milan"), (3, "Carla", "Rome"),
        (4, "Dan", "Turin"), (5, "Eva", "Milan"),
    ],
    "orders": [
        (1, 1, 120.5, "shipped"), (2, 1, 80.0, "pending"),
        (3, 2, 200.0, "shipped"), (4, 3, 50.0, "cancelled"),
        (5, 3, 75.25, "shipped"), (6, 4, 30.0, "pending"),
        (7, 5, 300.0, "shipped"), (8, 2, 45.0, "cancelled"),
    ],
}

SCHOOL_DDL = """
CREATE TABLE students (id INTEGER PRIMARY KEY, name TEXT, grade INTEGER);
CREATE TABLE enrollments (student_id INTEGER, course TEXT, score INTEGER,
                          FOREIGN KEY (student_id) REFERENCES students(id));
"""
SCHOOL_DATA = {
    "students": [
        (1, "Ann", 9), (2, "Ben", 10), (3, "Cal", 9),
        (4, "Dee", 11), (5, "Eli", 10), (6, "Fay", 9),
    ],
    "enrollments": [
        (1, "math", 91), (1, "art", 78), (2, "math", 65), (3, "science", 88),
        (3, "math", 70), (4, "art", 95), (5, "science", 59), (6, "math", 83),
        (4, "math", 88), (2, "art", 72),
    ],
}

LIBRARY_DDL = """
CREATE TABLE authors (id INTEGER PRIMARY KEY, name TEXT, country TEXT);
CREATE TABLE books (id INTEGER PRIMARY KEY, title TEXT, author_id INTEGER,
                    year INTEGER, pages INTEGER,
                    FOREIGN KEY (author_id) REFERENCES authors(id));
"""
LIBRARY_DATA = {
    "authors": [
        (1, "Orwell", "UK"), (2, "Calvino", "Italy"), (3, "Borges", "Argentina"),
        (4, "Woolf", "UK"), (5, "Eco", "Italy"),
    ],
    "books": [
        (1, "1984", 1, 1949, 328), (2, "Animal Farm", 1, 1945, 112),
        (3, "Invisible Cities", 2, 1972, 165), (4, "Ficciones", 3, 1944, 174),
        (5, "Orlando", 4, 1928, 336), (6, "The Baron in the Trees", 2, 1957, 217),
    ],
}

DATABASES = {
    "shop": (SHOP_DDL, SHOP_DATA),
    "school": (SCHOOL_DDL, SCHOOL_DATA),
    "library": (LIBRARY_DDL, LIBRARY_DATA),
}

SYNTAX_ERROR_SQL = "SELEC name FRO customers WHEER 1"
NO_SQL_COMPLETION = (
    "I looked at the schema but I am not able to determine a query that "
    "answers this question."
)

# (db_id, difficulty, evidence, question, gold, wrong1, wrong2)
QUESTIONS = [
    ("shop", "Simple", "",
     "How many customers are there?",
     "SELECT COUNT(*) FROM customers",
     "SELECT COUNT(*) FROM orders",
     "SELECT COUNT(*) + 1 FROM customers"),
    ("shop", "Simple", "",
     "List the names of customers living in Rome.",
     "SELECT name FROM customers WHERE city = 'Rome'",
     "SELECT name FROM customers WHERE city = 'Milan'",
     "SELECT name FROM customers"),
    ("shop", "Moderate", "shipped orders have status = 'shipped'",
     "What is the total amount of shipped orders?",
     "SELECT SUM(amount) FROM orders WHERE status = 'shipped'",
     "SELECT SUM(amount) FROM orders",
     "SELECT AVG(amount) FROM orders WHERE status = 'shipped'"),
    ("shop", "Moderate", "",
     "Which customers placed more than one order? Give their names.",
     "SELECT c.name FROM customers c JOIN orders o ON o.customer_id = c.id"
     " GROUP BY c.id HAVING COUNT(*) > 1",
     "SELECT c.name FROM customers c JOIN orders o ON o.customer_id = c.id"
     " GROUP BY c.id HAVING COUNT(*) > 2",
     "SELECT name FROM customers"),
    ("shop", "Challenging", "",
     "What is the name of the customer with the highest total order amount?",
     "SELECT c.name FROM customers c JOIN orders o ON o.customer_id = c.id"
     " GROUP BY c.id ORDER BY SUM(o.amount) DESC LIMIT 1",
     "SELECT c.name FROM customers c JOIN orders o ON o.customer_id = c.id"
     " GROUP BY c.id ORDER BY SUM(o.amount) ASC LIMIT 1",
     "SELECT name FROM customers ORDER BY id ASC LIMIT 1"),
    ("shop", "Simple", "",
     "How many orders are pending?",
     "SELECT COUNT(*) FROM orders WHERE status = 'pending'",
     "SELECT COUNT(*) FROM orders WHERE status = 'shipped'",
     "SELECT COUNT(*) FROM orders"),
    ("shop", "Moderate", "",
     "What is the average order amount for each city?",
     "SELECT c.city, AVG(o.amount) FROM customers c"
     " JOIN orders o ON o.customer_id = c.id GROUP BY c.city",
     "SELECT c.city, SUM(o.amount) FROM customers c"
     " JOIN orders o ON o.customer_id = c.id GROUP BY c.city",
     "SELECT city, 0 FROM customers GROUP BY city"),
    ("shop", "Challenging", "shipped orders have status = 'shipped'",
     "Which cities have a total shipped order amount greater than 150?",
     "SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id"
     " WHERE o.status = 'shipped' GROUP BY c.city HAVING SUM(o.amount) > 150",
     "SELECT c.city FROM customers c JOIN orders o ON o.customer_id = c.id"
     " GROUP BY c.city HAVING SUM(o.amount) > 400",
     "SELECT DISTINCT city FROM customers"),
    ("shop", "Simple", "",
     "What is the maximum order amount?",
     "SELECT MAX(amount) FROM orders",
     "SELECT MIN(amount) FROM orders",
     "SELECT MAX(amount) FROM orders WHERE status = 'pending'"),
    ("shop", "Moderate", "",
     "List each customer's name together with their number of orders.",
     "SELECT c.name, COUNT(o.id) FROM customers c"
     " LEFT JOIN orders o ON o.customer_id = c.id GROUP BY c.id",
     "SELECT c.name, COUNT(o.id) FROM customers c"
     " JOIN orders o ON o.customer_id = c.id GROUP BY c.id",
     "SELECT name, id FROM customers"),
    ("school", "Simple", "",
     "How many students are enrolled in the school?",
     "SELECT COUNT(*) FROM students",
     "SELECT COUNT(*) FROM enrollments",
     "SELECT COUNT(DISTINCT grade) FROM students"),
    ("school", "Simple", "",
     "List the names of all students in grade 9.",
     "SELECT name FROM students WHERE grade = 9",
     "SELECT name FROM students WHERE grade = 10",
     "SELECT name FROM students"),
    ("school", "Moderate", "",
     "What is the average score in the math course?",
     "SELECT AVG(score) FROM enrollments WHERE course = 'math'",
     "SELECT AVG(score) FROM enrollments",
     "SELECT MAX(score) FROM enrollments WHERE course = 'math'"),
    ("school", "Moderate", "",
     "Which students scored above 85 in any course? List each name once.",
     "SELECT DISTINCT s.name FROM students s"
     " JOIN enrollments e ON e.student_id = s.id WHERE e.score > 85",
     "SELECT DISTINCT s.name FROM students s"
     " JOIN enrollments e ON e.student_id = s.id WHERE e.score > 90",
     "SELECT name FROM students"),
    ("school", "Challenging", "",
     "Which course has the highest average score?",
     "SELECT course FROM enrollments GROUP BY course"
     " ORDER BY AVG(score) DESC LIMIT 1",
     "SELECT course FROM enrollments GROUP BY course"
     " ORDER BY AVG(score) ASC LIMIT 1",
     "SELECT course FROM enrollments GROUP BY course"
     " ORDER BY COUNT(*) DESC LIMIT 1"),
    ("school", "Simple", "",
     "How many distinct courses are offered?",
     "SELECT COUNT(DISTINCT course) FROM enrollments",
     "SELECT COUNT(course) FROM enrollments",
     "SELECT COUNT(*) FROM students"),
    ("school", "Moderate", "",
     "Show each student's name with their average score.",
     "SELECT s.name, AVG(e.score) FROM students s"
     " JOIN enrollments e ON e.student_id = s.id GROUP BY s.id",
     "SELECT s.name, SUM(e.score) FROM students s"
     " JOIN enrollments e ON e.student_id = s.id GROUP BY s.id",
     "SELECT s.name, MAX(e.score) FROM students s"
     " JOIN enrollments e ON e.student_id = s.id GROUP BY s.id"),
    ("school", "Challenging", "",
     "Which students have an average score above the overall average score?",
     "SELECT s.name FROM students s JOIN enrollments e ON e.student_id = s.id"
     " GROUP BY s.id"
     " HAVING AVG(e.score) > (SELECT AVG(score) FROM enrollments)",
     "SELECT s.name FROM students s JOIN enrollments e ON e.student_id = s.id"
     " GROUP BY s.id HAVING AVG(e.score) > 90",
     "SELECT name FROM students WHERE grade > 9"),
    ("school", "Simple", "",
     "What is the highest score recorded in any course?",
     "SELECT MAX(score) FROM enrollments",
     "SELECT MIN(score) FROM enrollments",
     "SELECT AVG(score) FROM enrollments"),
    ("school", "Moderate", "",
     "How many enrollments does each course have?",
     "SELECT course, COUNT(*) FROM enrollments GROUP BY course",
     "SELECT course, COUNT(DISTINCT student_id) FROM enrollments"
     " GROUP BY course HAVING COUNT(*) > 3",
     "SELECT course, SUM(score) FROM enrollments GROUP BY course"),
    ("library", "Simple", "",
     "How many books does the library hold?",
     "SELECT COUNT(*) FROM books",
     "SELECT COUNT(*) FROM authors",
     "SELECT COUNT(*) FROM books WHERE year > 1950"),
    ("library", "Simple", "",
     "List the titles of books written by Orwell.",
     "SELECT b.title FROM books b JOIN authors a ON b.author_id = a.id"
     " WHERE a.name = 'Orwell'",
     "SELECT b.title FROM books b JOIN authors a ON b.author_id = a.id"
     " WHERE a.name = 'Calvino'",
     "SELECT title FROM books"),
    ("library", "Moderate", "",
     "How many books were written by authors from each country?",
     "SELECT a.country, COUNT(b.id) FROM authors a"
     " JOIN books b ON b.author_id = a.id GROUP BY a.country",
     "SELECT a.country, COUNT(*) FROM authors a GROUP BY a.country",
     "SELECT country, 1 FROM authors GROUP BY country"),
    ("library", "Moderate", "",
     "What is the earliest publication year among all books?",
     "SELECT MIN(year) FROM books",
     "SELECT MAX(year) FROM books",
     "SELECT MIN(year) FROM books WHERE pages < 200"),
    ("library", "Challenging", "",
     "Which author has the largest total page count across their books?",
     "SELECT a.name FROM authors a JOIN books b ON b.author_id = a.id"
     " GROUP BY a.id ORDER BY SUM(b.pages) DESC LIMIT 1",
     "SELECT a.name FROM authors a JOIN books b ON b.author_id = a.id"
     " GROUP BY a.id ORDER BY SUM(b.pages) ASC LIMIT 1",
     "SELECT a.name FROM authors a JOIN books b ON b.author_id = a.id"
     " GROUP BY a.id ORDER BY COUNT(*) DESC LIMIT 1"),
    ("library", "Simple", "",
     "List the titles of books published before 1950.",
     "SELECT title FROM books WHERE year < 1950",
     "SELECT title FROM books WHERE year > 1950",
     "SELECT title FROM books WHERE year < 1930"),
    ("library", "Moderate", "UK authors have country = 'UK'",
     "What is the average page count of books by UK authors?",
     "SELECT AVG(b.pages) FROM books b JOIN authors a ON b.author_id = a.id"
     " WHERE a.country = 'UK'",
     "SELECT AVG(b.pages) FROM books b",
     "SELECT SUM(b.pages) FROM books b JOIN authors a ON b.author_id = a.id"
     " WHERE a.country = 'UK'"),
    ("library", "Challenging", "",
     "Which countries are represented by more than one book?",
     "SELECT a.country FROM authors a JOIN books b ON b.author_id = a.id"
     " GROUP BY a.country HAVING COUNT(b.id) > 1",
     "SELECT a.country FROM authors a JOIN books b ON b.author_id = a.id"
     " GROUP BY a.country HAVING COUNT(b.id) > 2",
     "SELECT DISTINCT country FROM authors"),
    ("library", "Simple", "",
     "Which book titles have more than 200 pages?",
     "SELECT title FROM books WHERE pages > 200",
     "SELECT title FROM books WHERE pages < 200",
     "SELECT title FROM books WHERE pages > 300"),
    ("library", "Moderate", "",
     "Which authors have no books in the library?",
     "SELECT name FROM authors WHERE id NOT IN"
     " (SELECT author_id FROM books)",
     "SELECT name FROM authors WHERE id IN (SELECT author_id FROM books)",
     "SELECT name FROM authors"),
    ("shop", "Simple", "",
     "List the distinct order statuses.",
     "SELECT DISTINCT status FROM orders",
     "SELECT status FROM orders WHERE status <> 'cancelled'",
     "SELECT DISTINCT city FROM customers"),
    ("shop", "Moderate", "",
     "How many customers live in each city?",
     "SELECT city, COUNT(*) FROM customers GROUP BY city",
     "SELECT city, COUNT(*) FROM customers GROUP BY city"
     " HAVING COUNT(*) > 1",
     "SELECT city, 1 FROM customers GROUP BY city"),
    ("school", "Simple", "",
     "How many students are in grade 10?",
     "SELECT COUNT(*) FROM students WHERE grade = 10",
     "SELECT COUNT(*) FROM students WHERE grade = 9",
     "SELECT COUNT(*) FROM students"),
    ("library", "Simple", "",
     "How many authors are from the UK?",
     "SELECT COUNT(*) FROM authors WHERE country = 'UK'",
     "SELECT COUNT(*) FROM authors WHERE country = 'Argentina'",
     "SELECT COUNT(*) FROM authors"),
    ("library", "Moderate", "",
     "List each author's name with the number of books they wrote.",
     "SELECT a.name, COUNT(b.id) FROM authors a"
     " LEFT JOIN books b ON b.author_id = a.id GROUP BY a.id",
     "SELECT a.name, COUNT(b.id) FROM authors a"
     " JOIN books b ON b.author_id = a.id GROUP BY a.id",
     "SELECT name, id FROM authors"),
]

# questions whose pools deliberately contain no correct candidate
NO_CORRECT = {4, 24}  # 0-based positions in QUESTIONS
# question whose pool is entirely non-executable
ALL_ERRORS = {9}


def build_databases() -> None:
    for db_id, (ddl, data) in DATABASES.items():
        db_dir = OUT / "dev_databases" / db_id
        db_dir.mkdir(parents=True, exist_ok=True)
        db_path = db_dir / f"{db_id}.sqlite"
        if db_path.exists():
            db_path.unlink()
        con = sqlite3.connect(db_path)
        con.executescript(ddl)
        for table, rows in data.items():
            placeholders = ",".join("?" * len(rows[0]))
            con.executemany(
                f"INSERT INTO {table} VALUES ({placeholders})", rows
            )
        con.commit()
        con.close()


def completion_for(sql: str, with_sketch: bool) -> str:
    if with_sketch:
        return (
            "Let me inspect the schema first.\n"
            "A first sketch could be:\n```sql\nSELECT 1\n```\n"
            "Refining it, the final query is:\n"
            f"```sql\n{sql}\n```"
        )
    return f"Thinking through the tables and joins step by step.\n```sql\n{sql}\n```"


def candidate_sqls(position: int, gold: str, wrong1: str, wrong2: str) -> list[str | None]:
    """Eight candidate SQL texts; None means a completion with no SQL."""
    variant = f"SELECT * FROM ({gold})"
    empty = f"SELECT * FROM ({gold}) WHERE 1 = 0"
    if position in ALL_ERRORS:
        return [SYNTAX_ERROR_SQL, None, "SELECT FROM WHERE", None,
                "GROUP BY x SELECT", None, SYNTAX_ERROR_SQL, None]
    if position in NO_CORRECT:
        extra = f"SELECT * FROM ({wrong2}) LIMIT 1"
        return [wrong1, variant_of(wrong1), wrong2, extra, empty,
                SYNTAX_ERROR_SQL, None, wrong1]
    return [gold, variant, wrong1, wrong2, empty, SYNTAX_ERROR_SQL, None, wrong1]


def variant_of(sql: str) -> str:
    return f"SELECT * FROM ({sql})"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    build_databases()

    questions = []
    pool_records = []
    meta = {
        "model_name": "handcrafted-fixture",
        "n_candidates": 8,
        "temperature": 0.8,
        "max_tokens": 512,
        "seed": 42,
    }
    for position, (db_id, difficulty, evidence, text, gold, w1, w2) in enumerate(QUESTIONS):
        qid = f"q{position:02d}"
        questions.append({
            "question_id": qid,
            "db_id": db_id,
            "question": text,
            "evidence": evidence,
            "SQL": gold,
            "difficulty": difficulty,
        })
        sqls = candidate_sqls(position, gold, w1, w2)
        rng = random.Random(f"pool:{qid}")
        rng.shuffle(sqls)
        for index, sql in enumerate(sqls):
            if sql is None:
                raw = NO_SQL_COMPLETION
                extracted = ""
            else:
                raw = completion_for(sql, with_sketch=(index % 3 == 0))
                extracted = sql
            pool_records.append({
                "question_id": qid,
                "index": index,
                "raw_completion": raw,
                "sql": extracted,
                "generator_meta": meta,
            })

    (OUT / "dev.json").write_text(
        json.dumps(questions, indent=2) + "\n", encoding="utf-8"
    )
    with (OUT / "pools.jsonl").open("w", encoding="utf-8") as fh:
        for record in pool_records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote {len(questions)} questions and "
          f"{len(pool_records)} pool records under {OUT}")


if __name__ == "__main__":
    sys.exit(main())
