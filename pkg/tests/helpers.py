"""Shared builders and oracles for the test suite."""

from __future__ import annotations

import itertools
import random

from gridrel.expr import And, Arith, Column, Compare, Literal, Not, Or, evaluate
from gridrel.gridfile import GridFile, SplitPolicy
from gridrel.schema import RelationSchema, integer


def int_schema(name="R", k=3, extra=0, capacity=4):
    attrs = tuple(integer(f"A{i}") for i in range(k + extra))
    return RelationSchema(name, attrs, tuple(range(k)), capacity)


def make_gridfile(tmp_path, schema, policy=SplitPolicy.MIDPOINT_FIRST, page_size=4096):
    return GridFile.create(tmp_path, schema, policy, page_size)


def random_rows(rng, n, ncols, lo=0, hi=63):
    return [tuple(rng.randint(lo, hi) for _ in range(ncols)) for _ in range(n)]


# ---- random predicates over one relation ------------------------------------

OPS = ("=", "<>", "<", ">", "<=", ">=")


def random_term(rng, cols, lo=0, hi=63):
    """A comparison over integer columns ``cols`` (list of Column)."""
    c = rng.choice(cols)
    shape = rng.random()
    if shape < 0.6:
        left, right = c, Literal(rng.randint(lo - 2, hi + 2))
        if rng.random() < 0.3:
            left, right = right, left
        return Compare(rng.choice(OPS), left, right)
    if shape < 0.8:
        return Compare(rng.choice(OPS), Arith(rng.choice("+-"), c, Literal(rng.randint(-5, 5))),
                       Literal(rng.randint(lo, hi)))
    d = rng.choice(cols)
    return Compare(rng.choice(OPS), c, Arith("+", d, Literal(rng.randint(-3, 3))))


def random_expr(rng, cols, depth=3, **kw):
    if depth == 0 or rng.random() < 0.3:
        return random_term(rng, cols, **kw)
    r = rng.random()
    if r < 0.4:
        return And(random_expr(rng, cols, depth - 1, **kw), random_expr(rng, cols, depth - 1, **kw))
    if r < 0.8:
        return Or(random_expr(rng, cols, depth - 1, **kw), random_expr(rng, cols, depth - 1, **kw))
    return Not(random_expr(rng, cols, depth - 1, **kw))


def holds(node, row):
    """Evaluate a single-relation predicate on a tuple (attribute-indexed columns)."""
    return bool(evaluate(node, lambda c: row[c.attr]))


def columns_for(schema):
    return [Column(a.name, schema.name, 0, i, "int") for i, a in enumerate(schema.attributes)]


def seeded(seed):
    return random.Random(seed)


# ---- append-only directory audit ---------------------------------------------


class DirectoryAudit:
    """Watches every directory page write and records forbidden byte changes.

    A write may touch (a) the header page once, (b) bytes past the end of all
    registered pieces (a piece being appended), or (c) bytes inside the
    element slots of registered pieces (in-place element updates).  Piece
    addresses are snapshotted and must never change.
    """

    def __init__(self, gf):
        self.gf = gf
        self.d = gf.directory
        self.f = gf.store.files["directory"]
        self.ps = self.f.page_size
        self.shadow = {i: self.f.peek(i) for i in range(self.f.npages)}
        self.addrs = {pos: p.addr for pos, p in self.d.pieces.items()}
        self.violations = []
        self.writes = 0
        self._spans = {}
        self.f.write_observers.append(self.on_write)

    def _piece_spans(self):
        out = []
        for pos, piece in self.d.pieces.items():
            key = (pos, piece.addr)
            if key not in self._spans:
                self._spans[key] = [
                    (pg * self.ps + lo, pg * self.ps + hi)
                    for pg, lo, hi in self.d.piece_byte_ranges(pos)
                ]
            out.extend(self._spans[key])
        return out

    def on_write(self, index, data):
        self.writes += 1
        old = self.shadow.get(index, bytes(self.ps))
        self.shadow[index] = data
        if old == data:
            return
        if index == 0:
            if any(old):
                self.violations.append("header page rewritten")
            return
        spans = self._piece_spans()
        hwm = max(hi for _, hi in spans)
        for o in range(0, self.ps, 64):
            if old[o : o + 64] == data[o : o + 64]:
                continue
            for b in range(o, min(o + 64, self.ps)):
                if old[b] == data[b]:
                    continue
                addr = index * self.ps + b
                if addr >= hwm or any(lo <= addr < hi for lo, hi in spans):
                    continue
                self.violations.append(f"byte {addr} outside any piece rewritten")
                return

    def check_addresses(self):
        for pos, addr in self.addrs.items():
            if self.d.pieces[pos].addr != addr:
                self.violations.append(f"piece {pos} moved from {addr}")
        self.addrs = {pos: p.addr for pos, p in self.d.pieces.items()}


# ---- lattice oracle for region algebra -----------------------------------------

_PY_OPS = {"=": "==", "<>": "!=", "<": "<", ">": ">", "<=": "<=", ">=": ">="}


def _py(node, index):
    if isinstance(node, Column):
        return f"p[{index[node.name]}]"
    if isinstance(node, Literal):
        return repr(node.value)
    if isinstance(node, Arith):
        return f"({_py(node.left, index)} {node.op} {_py(node.right, index)})"
    if isinstance(node, Compare):
        return f"({_py(node.left, index)} {_PY_OPS[node.op]} {_py(node.right, index)})"
    if isinstance(node, And):
        return f"({_py(node.left, index)} and {_py(node.right, index)})"
    if isinstance(node, Or):
        return f"({_py(node.left, index)} or {_py(node.right, index)})"
    if isinstance(node, Not):
        return f"(not {_py(node.operand, index)})"
    raise TypeError(node)


def compile_pred(node, names):
    """Turn a predicate AST into ``f(point) -> bool`` for fast brute-force checks."""
    if node is None:
        return lambda p: True
    index = {n: i for i, n in enumerate(names)}
    return eval(f"lambda p: bool({_py(node, index)})")


def named_expr(rng, names, depth=3, lo=0, hi=15):
    """Random predicate over name-only columns (for GridSpace.integers spaces)."""
    return random_expr(rng, [Column(n) for n in names], depth, lo=lo, hi=hi)


def region_mismatches(region, residual, node, names, bounds):
    """Lattice points where region+residual disagrees with ``node``; also flags overlaps."""
    want = compile_pred(node, names)
    keep = compile_pred(residual, names)
    covered = set()
    for box in region.boxes:
        clipped = [range(max(lo, b[0]), min(hi + 1, b[1])) for b, (lo, hi) in zip(box, bounds)]
        for p in itertools.product(*clipped):
            if p in covered:
                return [("overlap", p)]
            covered.add(p)
    bad = []
    for p in itertools.product(*(range(lo, hi + 1) for lo, hi in bounds)):
        got = p in covered and keep(p)
        if got != want(p):
            bad.append(p)
    return bad
