"""Statement nodes produced by the parser."""

from __future__ import annotations

from dataclasses import dataclass

from ..expr import dump as dump_expr


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None

    @property
    def label(self) -> str:
        return self.alias or self.name


@dataclass(frozen=True)
class OrderBy:
    column: object
    descending: bool = False


@dataclass(frozen=True)
class ColumnDef:
    name: str
    type: str  # "INTEGER" | "CHAR"
    width: int = 4


@dataclass(frozen=True)
class Select:
    columns: tuple | None  # None means *
    tables: tuple
    where: object = None
    order_by: OrderBy | None = None


@dataclass(frozen=True)
class Insert:
    table: str
    rows: tuple


@dataclass(frozen=True)
class Delete:
    table: str
    where: object = None


@dataclass(frozen=True)
class Update:
    table: str
    assignments: tuple  # ((column name, Literal), ...)
    where: object = None


@dataclass(frozen=True)
class CreateTable:
    name: str
    columns: tuple
    grid: tuple | None = None


@dataclass(frozen=True)
class DropTable:
    name: str


def _lit(node) -> str:
    return dump_expr(node)


def dump(stmt) -> str:
    """One-line canonical rendering used by golden tests."""
    if isinstance(stmt, Select):
        cols = "*" if stmt.columns is None else " ".join(dump_expr(c) for c in stmt.columns)
        tables = " ".join(t.name if t.alias is None else f"{t.name}:{t.alias}" for t in stmt.tables)
        out = f"(SELECT ({cols}) (FROM {tables}) (WHERE {dump_expr(stmt.where)})"
        if stmt.order_by is not None:
            way = "DESC" if stmt.order_by.descending else "ASC"
            out += f" (ORDER {dump_expr(stmt.order_by.column)} {way})"
        return out + ")"
    if isinstance(stmt, Insert):
        rows = " ".join("(" + " ".join(_lit(v) for v in row) + ")" for row in stmt.rows)
        return f"(INSERT {stmt.table} {rows})"
    if isinstance(stmt, Delete):
        return f"(DELETE {stmt.table} (WHERE {dump_expr(stmt.where)}))"
    if isinstance(stmt, Update):
        sets = " ".join(f"({c} {_lit(v)})" for c, v in stmt.assignments)
        return f"(UPDATE {stmt.table} (SET {sets}) (WHERE {dump_expr(stmt.where)}))"
    if isinstance(stmt, CreateTable):
        cols = " ".join(
            f"({c.name} {c.type if c.type == 'INTEGER' else f'CHAR({c.width})'})"
            for c in stmt.columns
        )
        grid = "" if stmt.grid is None else " (GRID " + " ".join(stmt.grid) + ")"
        return f"(CREATE {stmt.name} {cols}{grid})"
    if isinstance(stmt, DropTable):
        return f"(DROP {stmt.name})"
    raise TypeError(f"not a statement: {stmt!r}")
