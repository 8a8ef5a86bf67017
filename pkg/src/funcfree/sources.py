"""Logical-source access: CSV files and SQLite queries as in-memory relations."""
from __future__ import annotations

import csv
import os
import sqlite3
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import SchemaError, SourceIOError, SqlError, UnknownAttribute, UnsupportedConstruct
from .model import SourceDescriptor

Cell = Optional[str]


@dataclass(frozen=True)
class Relation:
    attributes: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        if len(set(self.attributes)) != len(self.attributes):
            raise SchemaError(f"duplicate attribute names in {list(self.attributes)}")
        width = len(self.attributes)
        for row in self.rows:
            if len(row) != width:
                raise SchemaError(f"row {row!r} has {len(row)} cells, expected {width}")

    @classmethod
    def of(cls, attributes: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Relation:
        return cls(tuple(attributes), tuple(tuple(r) for r in rows))

    def __len__(self) -> int:
        return len(self.rows)

    def index(self, attribute: str) -> int:
        try:
            return self.attributes.index(attribute)
        except ValueError:
            raise UnknownAttribute(attribute, self.attributes) from None

    def column(self, attribute: str) -> list[Cell]:
        i = self.index(attribute)
        return [row[i] for row in self.rows]


def distinct_project(rel: Relation, attrs: Sequence[str]) -> Relation:
    """Project ``rel`` on ``attrs`` with set semantics, keeping first-occurrence order."""
    idx = [rel.index(a) for a in attrs]
    seen = dict.fromkeys(tuple(row[i] for i in idx) for row in rel.rows)
    return Relation(tuple(attrs), tuple(seen))


def quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def sqlite_path(connection: str) -> str:
    for scheme in ("sqlite:///", "sqlite://", "sqlite:"):
        if connection.startswith(scheme):
            return connection[len(scheme):]
    return connection


def _cell(value) -> Cell:
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, bytes):
        return value.decode("utf-8")
    return str(value)


def read_csv(path) -> Relation:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty CSV file, header row required") from None
            if len(set(header)) != len(header):
                dupes = sorted({h for h in header if header.count(h) > 1})
                raise SchemaError(f"{path}: duplicate column names {dupes}")
            width = len(header)
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != width:
                    if not row:
                        continue
                    raise SchemaError(f"{path}:{lineno}: {len(row)} fields, header has {width}")
                rows.append(tuple(row))
    except OSError as exc:
        raise SourceIOError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return Relation(tuple(header), tuple(rows))


def write_csv(rel: Relation, path) -> SourceDescriptor:
    """Write ``rel`` as RFC 4180 CSV with LF line endings.

    NULL cells cannot be told apart from empty strings in CSV, so they are
    rejected rather than silently changed.
    """
    for row in rel.rows:
        if any(cell is None for cell in row):
            raise ValueError(f"{path}: NULL cells cannot be written to CSV")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(rel.attributes)
            writer.writerows(rel.rows)
    except OSError as exc:
        raise SourceIOError(f"cannot write {path}: {exc}") from exc
    except csv.Error as exc:
        raise ValueError(f"{path}: {exc}") from exc
    return SourceDescriptor.csv(str(path))


def _check_select(query: str) -> None:
    head = query.lstrip().split(None, 1)[0].upper() if query.strip() else ""
    if head not in ("SELECT", "WITH"):
        raise SqlError(f"only SELECT queries are allowed as logical sources: {query!r}")


def run_query(connection: str, query: str) -> Relation:
    _check_select(query)
    path = sqlite_path(connection)
    if path != ":memory:" and not os.path.exists(path):
        raise SourceIOError(f"database {path} does not exist")
    try:
        conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
        try:
            cur = conn.execute(query)
            attrs = tuple(d[0] for d in cur.description)
            rows = tuple(tuple(_cell(v) for v in row) for row in cur.fetchall())
        finally:
            conn.close()
    except sqlite3.Error as exc:
        raise SqlError(f"{exc} in query {query!r}") from exc
    return Relation(attrs, rows)


def write_sql_table(connection: str, table: str, rel: Relation) -> SourceDescriptor:
    """(Re)create ``table`` holding ``rel``; NULL cells are preserved."""
    cols = ", ".join(f"{quote_ident(a)} TEXT" for a in rel.attributes)
    marks = ", ".join("?" for _ in rel.attributes)
    try:
        conn = sqlite3.connect(sqlite_path(connection))
        try:
            with conn:
                conn.execute(f"DROP TABLE IF EXISTS {quote_ident(table)}")
                conn.execute(f"CREATE TABLE {quote_ident(table)} ({cols})")
                conn.executemany(f"INSERT INTO {quote_ident(table)} VALUES ({marks})", rel.rows)
        finally:
            conn.close()
    except sqlite3.Error as exc:
        raise SqlError(f"cannot write table {table}: {exc}") from exc
    return SourceDescriptor.sql(f"SELECT * FROM {quote_ident(table)}")


def _strip_query(query: str) -> str:
    return query.strip().rstrip(";").strip()


def push_distinct_to_sql(desc: SourceDescriptor, attrs: Sequence[str]) -> SourceDescriptor:
    """Wrap an SQL source in ``SELECT DISTINCT`` over ``attrs``; no data is moved."""
    if desc.kind != "sql-query":
        raise SqlError("distinct push-down needs an SQL source")
    cols = ", ".join(quote_ident(a) for a in attrs)
    query = f"SELECT DISTINCT {cols} FROM ({_strip_query(desc.locator)}) AS src"
    return SourceDescriptor("sql-query", query, "SQL", desc.connection)


class SourceContext:
    """Resolves descriptors to relations.

    CSV locators are looked up relative to ``roots`` in order (absolute
    paths are used as-is); SQL descriptors without their own connection use
    ``sql``. Loaded relations are cached per context.
    """

    def __init__(self, roots: Sequence = (".",), sql: Optional[str] = None):
        self.roots = [Path(r) for r in roots]
        self.sql = sql
        self._cache: dict[tuple, Relation] = {}

    def with_roots(self, *roots) -> SourceContext:
        return SourceContext([*roots, *self.roots], self.sql)

    def fresh(self) -> SourceContext:
        return SourceContext(self.roots, self.sql)

    def resolve_csv(self, locator: str) -> Path:
        path = Path(locator)
        if path.is_absolute():
            return path
        for root in self.roots:
            candidate = root / path
            if candidate.exists():
                return candidate
        raise SourceIOError(f"CSV source {locator!r} not found under {[str(r) for r in self.roots]}")

    def connection_for(self, desc: SourceDescriptor) -> str:
        conn = desc.connection or self.sql
        if conn is None:
            raise SqlError("SQL logical source without a connection (pass --sql)")
        path = sqlite_path(conn)
        if path != ":memory:" and not os.path.isabs(path):
            for root in self.roots:
                if (root / path).exists():
                    return str(root / path)
        return path

    def _key(self, desc: SourceDescriptor) -> tuple:
        if desc.kind == "sql-query":
            return (desc.kind, desc.locator, self.connection_for(desc))
        return (desc.kind, str(self.resolve_csv(desc.locator)))

    def load(self, desc: SourceDescriptor) -> Relation:
        if not desc.supported:
            raise UnsupportedConstruct(f"{desc.reference_formulation} sources are not supported")
        key = self._key(desc)
        rel = self._cache.get(key)
        if rel is None:
            if desc.kind == "sql-query":
                rel = run_query(key[2], desc.locator)
            elif desc.kind == "csv-file":
                rel = read_csv(key[1])
            else:
                raise SchemaError(f"unknown source kind {desc.kind!r}")
            self._cache[key] = rel
        return rel


def load(desc: SourceDescriptor, context: Optional[SourceContext] = None) -> Relation:
    return (context or SourceContext()).load(desc)
