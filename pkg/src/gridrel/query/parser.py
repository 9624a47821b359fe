"""Recursive-descent parser producing statement nodes and expression trees."""

from __future__ import annotations

from ..errors import QuerySyntaxError
from ..expr import COMPARISONS, And, Arith, Column, Compare, Literal, Not, Or
from .ast import ColumnDef, CreateTable, Delete, DropTable, Insert, OrderBy, Select, TableRef, Update
from .lexer import tokenize


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # ---- token helpers -----------------------------------------------------

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def at(self, kind, value=None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_kw(self, *words) -> bool:
        return self.tok.kind == "KEYWORD" and self.tok.value in words

    def error(self, expected):
        expected = tuple(sorted(set(expected)))
        found = self.tok.describe()
        raise QuerySyntaxError(f"unexpected {found}", self.tok.pos, expected, found)

    def expect_kw(self, word):
        if not self.at_kw(word):
            self.error([word])
        return self.advance()

    def expect_op(self, op):
        if not self.at("OP", op):
            self.error([op])
        return self.advance()

    def accept_op(self, op) -> bool:
        if self.at("OP", op):
            self.advance()
            return True
        return False

    def ident(self) -> str:
        if not self.at("IDENT"):
            self.error(["identifier"])
        return self.advance().value

    # ---- statements --------------------------------------------------------

    def statement(self):
        if self.at_kw("SELECT"):
            stmt = self.select()
        elif self.at_kw("INSERT"):
            stmt = self.insert()
        elif self.at_kw("DELETE"):
            stmt = self.delete()
        elif self.at_kw("UPDATE"):
            stmt = self.update()
        elif self.at_kw("CREATE"):
            stmt = self.create()
        elif self.at_kw("DROP"):
            stmt = self.drop()
        else:
            self.error(["CREATE", "DELETE", "DROP", "INSERT", "SELECT", "UPDATE"])
        self.accept_op(";")
        if not self.at("EOF"):
            self.error(["end of input"])
        return stmt

    def select(self):
        self.expect_kw("SELECT")
        if self.accept_op("*"):
            columns = None
        else:
            columns = [self.column()]
            while self.accept_op(","):
                columns.append(self.column())
            columns = tuple(columns)
        self.expect_kw("FROM")
        tables = [self.table_ref()]
        while self.accept_op(","):
            tables.append(self.table_ref())
        where = self.where()
        order = None
        if self.at_kw("ORDER"):
            self.advance()
            self.expect_kw("BY")
            col = self.column()
            desc = False
            if self.at_kw("ASC", "DESC"):
                desc = self.advance().value == "DESC"
            order = OrderBy(col, desc)
        return Select(columns, tuple(tables), where, order)

    def table_ref(self):
        name = self.ident()
        alias = self.advance().value if self.at("IDENT") else None
        return TableRef(name, alias)

    def where(self):
        if self.at_kw("WHERE"):
            self.advance()
            return self.expr()
        return None

    def insert(self):
        self.expect_kw("INSERT")
        self.expect_kw("INTO")
        table = self.ident()
        self.expect_kw("VALUES")
        rows = [self.value_row()]
        while self.accept_op(","):
            rows.append(self.value_row())
        return Insert(table, tuple(rows))

    def value_row(self):
        self.expect_op("(")
        vals = [self.literal()]
        while self.accept_op(","):
            vals.append(self.literal())
        self.expect_op(")")
        return tuple(vals)

    def literal(self):
        if self.at("STRING"):
            return Literal(self.advance().value)
        neg = self.accept_op("-")
        if not neg:
            self.accept_op("+")
        if self.at("INT"):
            v = self.advance().value
            return Literal(-v if neg else v)
        self.error(["number", "string"] if not neg else ["number"])

    def delete(self):
        self.expect_kw("DELETE")
        self.expect_kw("FROM")
        table = self.ident()
        return Delete(table, self.where())

    def update(self):
        self.expect_kw("UPDATE")
        table = self.ident()
        self.expect_kw("SET")
        sets = [self.assignment()]
        while self.accept_op(","):
            sets.append(self.assignment())
        return Update(table, tuple(sets), self.where())

    def assignment(self):
        name = self.ident()
        self.expect_op("=")
        return name, self.literal()

    def create(self):
        self.expect_kw("CREATE")
        self.expect_kw("TABLE")
        name = self.ident()
        self.expect_op("(")
        cols = [self.column_def()]
        while self.accept_op(","):
            cols.append(self.column_def())
        self.expect_op(")")
        grid = None
        if self.at_kw("GRID"):
            self.advance()
            self.expect_op("(")
            grid = [self.ident()]
            while self.accept_op(","):
                grid.append(self.ident())
            self.expect_op(")")
            grid = tuple(grid)
        return CreateTable(name, tuple(cols), grid)

    def column_def(self):
        name = self.ident()
        if self.at_kw("INTEGER"):
            self.advance()
            return ColumnDef(name, "INTEGER", 4)
        if self.at_kw("CHAR"):
            self.advance()
            self.expect_op("(")
            if not self.at("INT"):
                self.error(["number"])
            width = self.advance().value
            self.expect_op(")")
            return ColumnDef(name, "CHAR", width)
        self.error(["CHAR", "INTEGER"])

    def drop(self):
        self.expect_kw("DROP")
        self.expect_kw("TABLE")
        return DropTable(self.ident())

    # ---- expressions -------------------------------------------------------

    def column(self):
        name = self.ident()
        if self.accept_op("."):
            return Column(self.ident(), name)
        return Column(name)

    def expr(self):
        node = self.and_expr()
        while self.at_kw("OR"):
            self.advance()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self):
        node = self.not_expr()
        while self.at_kw("AND"):
            self.advance()
            node = And(node, self.not_expr())
        return node

    def not_expr(self):
        if self.at_kw("NOT"):
            self.advance()
            return Not(self.not_expr())
        return self.comparison()

    def comparison(self):
        left = self.additive()
        if self.tok.kind == "OP" and self.tok.value in COMPARISONS:
            op = self.advance().value
            return Compare(op, left, self.additive())
        return left

    def additive(self):
        node = self.unary()
        while self.at("OP", "+") or self.at("OP", "-"):
            op = self.advance().value
            node = Arith(op, node, self.unary())
        return node

    def unary(self):
        if self.accept_op("-"):
            operand = self.unary()
            if isinstance(operand, Literal) and isinstance(operand.value, int):
                return Literal(-operand.value)
            return Arith("-", Literal(0), operand)
        if self.accept_op("+"):
            return self.unary()
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return Literal(t.value)
        if t.kind == "STRING":
            self.advance()
            return Literal(t.value)
        if t.kind == "IDENT":
            return self.column()
        if self.accept_op("("):
            node = self.expr()
            self.expect_op(")")
            return node
        self.error(["(", "-", "identifier", "NOT", "number", "string"])


def parse(text: str):
    """Parse one statement (an optional trailing ``;`` is allowed)."""
    return Parser(text).statement()


def parse_expr(text: str):
    p = Parser(text)
    node = p.expr()
    if not p.at("EOF"):
        p.error(["end of input"])
    return node
