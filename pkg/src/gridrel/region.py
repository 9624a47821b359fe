"""Query regions as sets of pairwise disjoint axis-aligned boxes.

A box holds one half-open key interval ``(lo, hi)`` per grid dimension.
AND intersects box sets, OR carves the second operand's boxes around the
first's so the result stays disjoint, and NOT is pushed to the leaves before
any of this happens.  Terms that cannot be expressed as boxes contribute the
whole space and survive as a residual predicate checked per tuple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import DomainError
from .expr import FLIPPED, Arith, And, Column, Compare, Literal, Not, Or, evaluate, push_not

DEFAULT_BOX_LIMIT = 256


def box_intersection(a, b):
    out = []
    for (alo, ahi), (blo, bhi) in zip(a, b):
        lo, hi = max(alo, blo), min(ahi, bhi)
        if lo >= hi:
            return None
        out.append((lo, hi))
    return tuple(out)


def box_contains(box, point) -> bool:
    return all(lo <= x < hi for (lo, hi), x in zip(box, point))


def box_size(box) -> int:
    n = 1
    for lo, hi in box:
        n *= hi - lo
    return n


class RegionSet:
    """A set of pairwise disjoint boxes in a k-dimensional key space."""

    __slots__ = ("boxes", "k")

    def __init__(self, boxes, k):
        self.boxes = [tuple(tuple(iv) for iv in b) for b in boxes]
        self.k = k

    @classmethod
    def whole(cls, domains):
        return cls([tuple(domains)], len(domains))

    @classmethod
    def empty(cls, k):
        return cls([], k)

    def __len__(self):
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)

    def __repr__(self):
        return f"RegionSet({self.boxes!r})"

    def is_empty(self) -> bool:
        return not self.boxes

    def contains(self, point) -> bool:
        return any(box_contains(b, point) for b in self.boxes)

    def is_disjoint(self) -> bool:
        return all(
            box_intersection(a, b) is None for a, b in itertools.combinations(self.boxes, 2)
        )

    def bounding_box(self):
        if not self.boxes:
            return None
        return tuple(
            (min(b[d][0] for b in self.boxes), max(b[d][1] for b in self.boxes))
            for d in range(self.k)
        )

    def intersect(self, other: "RegionSet") -> "RegionSet":
        return intersect(self, other)

    def union(self, other: "RegionSet") -> "RegionSet":
        return union(self, other)


def intersect(h1: RegionSet, h2: RegionSet) -> RegionSet:
    out = []
    for c1 in h1.boxes:
        for c2 in h2.boxes:
            c = box_intersection(c1, c2)
            if c is not None:
                out.append(c)
    return RegionSet(out, h1.k)


def _protrusion(c2, c3, j):
    """How many sides of c2 stick out past c3 on dimension j."""
    return (c2[j][0] < c3[j][0]) + (c3[j][1] < c2[j][1])


def carve(c1, c2) -> list:
    """Pieces of ``c2`` outside ``c1``, peeled off one dimension side at a time."""
    c3 = box_intersection(c1, c2)
    if c3 is None:
        return [c2]
    pieces = []
    cur = list(c2)
    while tuple(cur) != c3:
        # prefer dimensions where only one side protrudes
        candidates = [j for j in range(len(cur)) if cur[j] != c3[j]]
        j = min(candidates, key=lambda j: (_protrusion(cur, c3, j) != 1, j))
        lo2, hi2 = cur[j]
        lo3, hi3 = c3[j]
        if lo2 < lo3:
            piece = list(cur)
            piece[j] = (lo2, lo3)
            cur[j] = (lo3, hi2)
        else:
            piece = list(cur)
            piece[j] = (hi3, hi2)
            cur[j] = (lo2, hi3)
        pieces.append(tuple(piece))
    return pieces


def split(c1, c2) -> list:
    """Disjoint boxes covering ``c1`` union ``c2``; ``c1`` is kept whole."""
    c1, c2 = tuple(c1), tuple(c2)
    c3 = box_intersection(c1, c2)
    if c3 is None:
        return [c1, c2]
    if c3 == c1:
        return [c2]
    if c3 == c2:
        return [c1]
    pieces = carve(c1, c2)
    limit = 2 ** len(c1) - 1
    if len(pieces) > limit:
        raise AssertionError(f"split produced {len(pieces)} pieces, bound is {limit}")
    return pieces + [c1]


def union(h1: RegionSet, h2: RegionSet) -> RegionSet:
    out = list(h1.boxes)
    for c2 in h2.boxes:
        pieces = [c2]
        for c1 in h1.boxes:
            nxt = []
            for p in pieces:
                c3 = box_intersection(c1, p)
                if c3 is None:
                    nxt.append(p)
                elif c3 == p:
                    continue
                elif c3 == c1:
                    nxt.extend(carve(c1, p))
                else:
                    nxt.extend(b for b in split(c1, p) if b != c1)
            pieces = nxt
        out.extend(pieces)
    return RegionSet(out, h1.k)


# ---- building regions from predicates ---------------------------------------


@dataclass
class Dim:
    name: str
    domain: tuple  # half-open key range
    key: object  # value -> key
    integer: bool


class GridSpace:
    """The key space of one relation's grid, plus column-to-dimension lookup."""

    def __init__(self, dims, aliases=None):
        self.dims = list(dims)
        self.k = len(self.dims)
        self._lookup = {d.name: i for i, d in enumerate(self.dims)}
        self._lookup.update(aliases or {})

    @classmethod
    def integers(cls, bounds):
        """Toy space over integer attributes, ``bounds`` maps name -> (lo, hi) inclusive."""
        return cls(Dim(n, (lo, hi + 1), int, True) for n, (lo, hi) in bounds.items())

    @classmethod
    def for_schema(cls, schema):
        from .schema import INT_OFFSET, AttrType

        dims, aliases = [], {}
        for d in range(schema.k):
            a = schema.grid_attribute(d)
            if a.type is AttrType.INTEGER:
                # unchecked: folded bounds may fall outside 32 bits and get clamped
                dims.append(Dim(a.name, a.domain, lambda v: v + INT_OFFSET, True))
            else:
                dims.append(Dim(a.name, a.domain, a.key, False))
            aliases[("attr", schema.grid_attrs[d])] = d
        return cls(dims, aliases)

    @property
    def domains(self):
        return tuple(d.domain for d in self.dims)

    def whole(self) -> RegionSet:
        return RegionSet.whole(self.domains)

    def empty(self) -> RegionSet:
        return RegionSet.empty(self.k)

    def dim_of(self, column: Column):
        if column.attr is not None:
            return self._lookup.get(("attr", column.attr))
        return self._lookup.get(column.name)


def _clamped_boxes(space, dim, op, key):
    lo, hi = space.dims[dim].domain
    if op == "=":
        spans = [(key, key + 1)]
    elif op == "<>":
        spans = [(lo, key), (key + 1, hi)]
    elif op == "<":
        spans = [(lo, key)]
    elif op == "<=":
        spans = [(lo, key + 1)]
    elif op == ">":
        spans = [(key + 1, hi)]
    elif op == ">=":
        spans = [(key, hi)]
    else:
        raise ValueError(f"unknown comparison {op!r}")
    boxes = []
    for a, b in spans:
        a, b = max(a, lo), min(b, hi)
        if a < b:
            box = list(space.domains)
            box[dim] = (a, b)
            boxes.append(tuple(box))
    return RegionSet(boxes, space.k)


def from_basic_term(space: GridSpace, attr, op, constant) -> RegionSet:
    """Region of ``attr op constant`` for a grid attribute ``attr`` (name or Column)."""
    column = attr if isinstance(attr, Column) else Column(attr)
    dim = space.dim_of(column)
    if dim is None:
        raise DomainError(f"{column.name} is not a grid attribute")
    key = space.dims[dim].key(constant)
    lo, hi = space.dims[dim].domain
    if not lo <= key < hi:
        raise DomainError(f"constant {constant!r} outside the domain of {column.name}")
    return _clamped_boxes(space, dim, op, key)


def _linear(node, space):
    """``({dim: coefficient}, constant)`` if node is +/- over integer grid columns and ints."""
    if isinstance(node, Literal):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            return None
        return {}, node.value
    if isinstance(node, Column):
        dim = space.dim_of(node)
        if dim is None or not space.dims[dim].integer:
            return None
        return {dim: 1}, 0
    if isinstance(node, Arith):
        a, b = _linear(node.left, space), _linear(node.right, space)
        if a is None or b is None:
            return None
        sign = 1 if node.op == "+" else -1
        coef = dict(a[0])
        for d, c in b[0].items():
            coef[d] = coef.get(d, 0) + sign * c
        return {d: c for d, c in coef.items() if c}, a[1] + sign * b[1]
    return None


def _has_columns(node) -> bool:
    if isinstance(node, Column):
        return True
    if isinstance(node, (Arith, Compare)):
        return _has_columns(node.left) or _has_columns(node.right)
    return False


def from_join_or_arith_term(space: GridSpace, term: Compare):
    """(region, residual) for a comparison between expressions of one relation.

    Integer terms linear in a single grid column with unit coefficient fold to
    an exact interval; everything else gets the whole space and is kept as a
    residual.
    """
    whole = space.whole()
    lin_l, lin_r = _linear(term.left, space), _linear(term.right, space)
    if lin_l is not None and lin_r is not None:
        coef = dict(lin_l[0])
        for d, c in lin_r[0].items():
            coef[d] = coef.get(d, 0) - c
        coef = {d: c for d, c in coef.items() if c}
        const = lin_l[1] - lin_r[1]
        if not coef:
            return (whole if evaluate(Compare(term.op, Literal(const), Literal(0)), None)
                    else space.empty()), None
        if len(coef) == 1:
            (dim, c), = coef.items()
            if c == 1:
                op, bound = term.op, -const
            elif c == -1:
                op, bound = FLIPPED[term.op], const
            else:
                return whole, term
            return _clamped_boxes(space, dim, op, space.dims[dim].key(bound)), None
    return whole, term


def _term(space, term: Compare):
    if not _has_columns(term):
        return (space.whole() if evaluate(term, None) else space.empty()), None
    left, right, op = term.left, term.right, term.op
    if not isinstance(left, Column) and isinstance(right, Column):
        left, right, op = right, left, FLIPPED[op]
    if isinstance(left, Column) and isinstance(right, Literal) and isinstance(right.value, str):
        dim = space.dim_of(left)
        if dim is None:
            return space.whole(), term
        return _clamped_boxes(space, dim, op, space.dims[dim].key(right.value)), None
    return from_join_or_arith_term(space, term)


def _valve(region, residual, node, limit):
    if limit is not None and len(region) > limit:
        return RegionSet([region.bounding_box()], region.k), node
    return region, residual


def _build(node, space, limit):
    if isinstance(node, And):
        r1, res1 = _build(node.left, space, limit)
        if r1.is_empty():
            return r1, None
        r2, res2 = _build(node.right, space, limit)
        region = intersect(r1, r2)
        if region.is_empty():
            return region, None
        residual = res1 if res2 is None else res2 if res1 is None else And(res1, res2)
        return _valve(region, residual, node, limit)
    if isinstance(node, Or):
        r1, res1 = _build(node.left, space, limit)
        r2, res2 = _build(node.right, space, limit)
        region = union(r1, r2)
        residual = None if res1 is None and res2 is None else node
        return _valve(region, residual, node, limit)
    if isinstance(node, Compare):
        return _term(space, node)
    if isinstance(node, Not):
        # only reachable for NOT over a non-boolean node; keep it exact via residual
        return space.whole(), node
    raise TypeError(f"cannot build a region from {node!r}")


def from_expr(node, space: GridSpace, limit=DEFAULT_BOX_LIMIT):
    """(RegionSet, residual) with ``t |= node`` iff t lies in the region and passes the residual."""
    if node is None:
        return space.whole(), None
    return _build(push_not(node), space, limit)
