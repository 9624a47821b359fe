"""Binary expression trees for query predicates."""

from __future__ import annotations

from dataclasses import dataclass

COMPARISONS = ("=", "<>", "<", ">", "<=", ">=")

NEGATED = {"=": "<>", "<>": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
# op such that (a op b) == (b FLIPPED[op] a)
FLIPPED = {"=": "=", "<>": "<>", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


@dataclass(frozen=True)
class Column:
    name: str
    table: str | None = None
    rel: int | None = None  # index into the FROM list, set by analysis
    attr: int | None = None  # attribute index within the relation
    kind: str | None = None  # "int" | "char"


@dataclass(frozen=True)
class Literal:
    value: object


@dataclass(frozen=True)
class Arith:
    op: str  # "+" | "-"
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    operand: object


def compare(op, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "<=":
        return a <= b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown comparison {op!r}")


def evaluate(node, lookup):
    """Evaluate ``node``; ``lookup(column)`` supplies column values."""
    if isinstance(node, Column):
        return lookup(node)
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, Arith):
        a, b = evaluate(node.left, lookup), evaluate(node.right, lookup)
        return a + b if node.op == "+" else a - b
    if isinstance(node, Compare):
        return compare(node.op, evaluate(node.left, lookup), evaluate(node.right, lookup))
    if isinstance(node, And):
        return evaluate(node.left, lookup) and evaluate(node.right, lookup)
    if isinstance(node, Or):
        return evaluate(node.left, lookup) or evaluate(node.right, lookup)
    if isinstance(node, Not):
        return not evaluate(node.operand, lookup)
    raise TypeError(f"not an expression node: {node!r}")


def push_not(node, negate=False):
    """Eliminate NOT by De Morgan's laws and comparison negation."""
    if isinstance(node, Not):
        return push_not(node.operand, not negate)
    if isinstance(node, And):
        l, r = push_not(node.left, negate), push_not(node.right, negate)
        return Or(l, r) if negate else And(l, r)
    if isinstance(node, Or):
        l, r = push_not(node.left, negate), push_not(node.right, negate)
        return And(l, r) if negate else Or(l, r)
    if isinstance(node, Compare):
        return Compare(NEGATED[node.op], node.left, node.right) if negate else node
    if negate:
        return Not(node)
    return node


def conjuncts(node) -> list:
    if node is None:
        return []
    if isinstance(node, And):
        return conjuncts(node.left) + conjuncts(node.right)
    return [node]


def conjoin(nodes):
    result = None
    for n in nodes:
        if n is None:
            continue
        result = n if result is None else And(result, n)
    return result


def columns(node) -> list:
    if isinstance(node, Column):
        return [node]
    if isinstance(node, Literal) or node is None:
        return []
    if isinstance(node, Not):
        return columns(node.operand)
    return columns(node.left) + columns(node.right)


def relations(node) -> frozenset:
    return frozenset(c.rel for c in columns(node))


def dump(node) -> str:
    """Stable s-expression rendering, used by golden tests and EXPLAIN."""
    if node is None:
        return "TRUE"
    if isinstance(node, Column):
        return f"{node.table}.{node.name}" if node.table else node.name
    if isinstance(node, Literal):
        if isinstance(node.value, str):
            return "'" + node.value.replace("'", "''") + "'"
        return str(node.value)
    if isinstance(node, Not):
        return f"(NOT {dump(node.operand)})"
    tag = {And: "AND", Or: "OR"}.get(type(node), getattr(node, "op", "?"))
    return f"({tag} {dump(node.left)} {dump(node.right)})"
