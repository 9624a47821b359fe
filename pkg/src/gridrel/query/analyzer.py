"""Name resolution and type checking of parsed statements."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import AnalysisError, DomainError, SchemaError, TypeMismatchError
from ..expr import And, Arith, Column, Compare, Literal, Not, Or
from ..schema import INT_MAX, INT_MIN, AttrType, Attribute, RelationSchema
from .ast import CreateTable, Delete, DropTable, Insert, Select, Update
from .catalog import check_name


@dataclass(frozen=True)
class Bound:
    """A FROM-list entry: display label plus schema."""

    label: str
    schema: RelationSchema


@dataclass(frozen=True)
class AnalyzedSelect:
    tables: tuple  # Bound per FROM entry
    columns: tuple  # resolved output columns
    where: object
    order_by: object  # resolved Column or None
    descending: bool = False

    @property
    def headers(self) -> tuple:
        if len({c.table for c in self.columns}) > 1 or any(
            sum(1 for d in self.columns if d.name == c.name) > 1 for c in self.columns
        ):
            return tuple(f"{c.table}.{c.name}" for c in self.columns)
        return tuple(c.name for c in self.columns)


@dataclass(frozen=True)
class AnalyzedWrite:
    kind: str  # INSERT | DELETE | UPDATE
    schema: RelationSchema
    rows: tuple = ()  # INSERT values
    where: object = None
    assignments: tuple = ()  # ((attr index, value), ...)


def _kind(attr: Attribute) -> str:
    return "int" if attr.type is AttrType.INTEGER else "char"


class Scope:
    def __init__(self, tables):
        self.tables = tuple(tables)

    def resolve(self, col: Column) -> Column:
        matches = []
        for i, b in enumerate(self.tables):
            if col.table is not None and col.table != b.label:
                continue
            for j, a in enumerate(b.schema.attributes):
                if a.name == col.name:
                    matches.append((i, j, b, a))
        if not matches:
            if col.table is not None and not any(b.label == col.table for b in self.tables):
                raise AnalysisError(f"unknown relation {col.table} in column {col.table}.{col.name}")
            raise AnalysisError(f"unknown column {col.name}")
        if len(matches) > 1:
            raise AnalysisError(f"ambiguous column {col.name}")
        i, j, b, a = matches[0]
        return Column(col.name, b.label, i, j, _kind(a))


def literal_for(attr: Attribute, lit: Literal):
    """Validate a literal destined for ``attr`` and return the stored value."""
    v = lit.value
    if attr.type is AttrType.INTEGER:
        if not isinstance(v, int):
            raise TypeMismatchError(f"{attr.name} is INTEGER, got string {v!r}")
        if not INT_MIN <= v <= INT_MAX:
            raise DomainError(f"{v} outside the INTEGER range of {attr.name}")
        return v
    if not isinstance(v, str):
        raise TypeMismatchError(f"{attr.name} is CHAR({attr.width}), got integer {v}")
    if len(v.rstrip(" ")) > attr.width:
        raise AnalysisError(f"literal {v!r} longer than CHAR({attr.width}) column {attr.name}")
    return attr.check(v.rstrip(" "))


def _type(node) -> str:
    if isinstance(node, Column):
        return node.kind
    if isinstance(node, Literal):
        return "int" if isinstance(node.value, int) else "char"
    if isinstance(node, Arith):
        return "int"
    return "bool"


class Analyzer:
    def __init__(self, catalog):
        self.catalog = catalog

    def analyze(self, stmt):
        if isinstance(stmt, Select):
            return self.select(stmt)
        if isinstance(stmt, Insert):
            return self.insert(stmt)
        if isinstance(stmt, Delete):
            schema = self.catalog.lookup(stmt.table)
            scope = Scope([Bound(schema.name, schema)])
            return AnalyzedWrite("DELETE", schema, where=self.condition(stmt.where, scope))
        if isinstance(stmt, Update):
            return self.update(stmt)
        if isinstance(stmt, CreateTable):
            return self.create(stmt)
        if isinstance(stmt, DropTable):
            self.catalog.lookup(stmt.name)
            return stmt
        raise TypeError(f"not a statement: {stmt!r}")

    # ---- SELECT ------------------------------------------------------------

    def select(self, stmt: Select) -> AnalyzedSelect:
        tables = []
        for ref in stmt.tables:
            schema = self.catalog.lookup(ref.name)
            if any(b.label == ref.label for b in tables):
                raise AnalysisError(f"relation label {ref.label} used twice; add an alias")
            tables.append(Bound(ref.label, schema))
        scope = Scope(tables)
        if stmt.columns is None:
            columns = tuple(
                Column(a.name, b.label, i, j, _kind(a))
                for i, b in enumerate(tables)
                for j, a in enumerate(b.schema.attributes)
            )
        else:
            columns = tuple(scope.resolve(c) for c in stmt.columns)
        order, desc = None, False
        if stmt.order_by is not None:
            order, desc = scope.resolve(stmt.order_by.column), stmt.order_by.descending
        return AnalyzedSelect(tuple(tables), columns, self.condition(stmt.where, scope),
                              order, desc)

    # ---- expressions -------------------------------------------------------

    def condition(self, node, scope):
        if node is None:
            return None
        node = self.expr(node, scope)
        if _type(node) != "bool":
            raise TypeMismatchError("WHERE clause must be a condition")
        return node

    def expr(self, node, scope):
        if isinstance(node, Column):
            return scope.resolve(node)
        if isinstance(node, Literal):
            return node
        if isinstance(node, Arith):
            left, right = self.expr(node.left, scope), self.expr(node.right, scope)
            for side in (left, right):
                if _type(side) != "int":
                    raise TypeMismatchError(f"arithmetic needs INTEGER operands, got {_type(side)}")
            return Arith(node.op, left, right)
        if isinstance(node, Compare):
            left, right = self.expr(node.left, scope), self.expr(node.right, scope)
            lt, rt = _type(left), _type(right)
            if "bool" in (lt, rt):
                raise TypeMismatchError(f"cannot compare a condition with {node.op}")
            if lt != rt:
                raise TypeMismatchError(f"cannot compare {lt.upper()} with {rt.upper()}")
            left, right = self._char_literal(left, right, scope), self._char_literal(right, left, scope)
            return Compare(node.op, left, right)
        if isinstance(node, (And, Or)):
            left, right = self.expr(node.left, scope), self.expr(node.right, scope)
            for side in (left, right):
                if _type(side) != "bool":
                    raise TypeMismatchError(f"{type(node).__name__.upper()} needs conditions")
            return type(node)(left, right)
        if isinstance(node, Not):
            operand = self.expr(node.operand, scope)
            if _type(operand) != "bool":
                raise TypeMismatchError("NOT needs a condition")
            return Not(operand)
        raise TypeError(f"not an expression node: {node!r}")

    def _char_literal(self, node, other, scope):
        if not (isinstance(node, Literal) and isinstance(node.value, str)):
            return node
        if isinstance(other, Column):
            width = scope.tables[other.rel].schema.attributes[other.attr].width
            if len(node.value.rstrip(" ")) > width:
                raise AnalysisError(
                    f"literal {node.value!r} longer than CHAR({width}) column {other.name}"
                )
        for ch in node.value:
            if not 0x20 <= ord(ch) <= 0x7E:
                raise AnalysisError(f"non-printable character {ch!r} in literal")
        return Literal(node.value.rstrip(" "))

    # ---- writes ------------------------------------------------------------

    def insert(self, stmt: Insert) -> AnalyzedWrite:
        schema = self.catalog.lookup(stmt.table)
        rows = []
        for row in stmt.rows:
            if len(row) != len(schema.attributes):
                raise AnalysisError(
                    f"{schema.name} has {len(schema.attributes)} columns, got {len(row)} values"
                )
            rows.append(tuple(literal_for(a, v) for a, v in zip(schema.attributes, row)))
        return AnalyzedWrite("INSERT", schema, rows=tuple(rows))

    def update(self, stmt: Update) -> AnalyzedWrite:
        schema = self.catalog.lookup(stmt.table)
        scope = Scope([Bound(schema.name, schema)])
        sets, seen = [], set()
        for name, lit in stmt.assignments:
            col = scope.resolve(Column(name))
            if col.attr in seen:
                raise AnalysisError(f"column {name} assigned twice")
            seen.add(col.attr)
            sets.append((col.attr, literal_for(schema.attributes[col.attr], lit)))
        return AnalyzedWrite("UPDATE", schema, where=self.condition(stmt.where, scope),
                             assignments=tuple(sets))

    def create(self, stmt: CreateTable) -> RelationSchema:
        check_name(stmt.name, "relation")
        names = [c.name for c in stmt.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column in {stmt.name}")
        attrs = []
        for c in stmt.columns:
            check_name(c.name, "attribute")
            attrs.append(Attribute(c.name, AttrType(c.type), c.width))
        grid = None
        if stmt.grid is not None:
            if len(set(stmt.grid)) != len(stmt.grid):
                raise SchemaError("duplicate column in GRID list")
            for g in stmt.grid:
                if g not in names:
                    raise AnalysisError(f"unknown column {g} in GRID list")
            grid = tuple(names.index(g) for g in stmt.grid)
        return RelationSchema(stmt.name, tuple(attrs), grid)
