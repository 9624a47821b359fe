import itertools

import pytest
from helpers import named_expr, region_mismatches, seeded
from hypothesis import given, settings
from hypothesis import strategies as st

from gridrel.errors import DomainError
from gridrel.expr import And, Arith, Column, Compare, Literal, Not, Or
from gridrel.region import (
    GridSpace,
    RegionSet,
    box_intersection,
    carve,
    from_basic_term,
    from_expr,
    intersect,
    split,
    union,
)
from gridrel.schema import RelationSchema, char, integer

NAMES = ("A1", "A2", "A3")
BOUNDS = ((0, 15),) * 3
SPACE = GridSpace.integers(dict(zip(NAMES, BOUNDS)))


def C(n):
    return Column(n)


def L(v):
    return Literal(v)


def lattice(k, n):
    return list(itertools.product(range(n), repeat=k))


def members(region, pts):
    return {p for p in pts if region.contains(p)}


def test_basic_terms():
    s = GridSpace.integers({"A1": (0, 9), "A2": (0, 9)})
    assert from_basic_term(s, "A1", "=", 5).boxes == [((5, 6), (0, 10))]
    assert from_basic_term(s, "A1", "<>", 5).boxes == [((0, 5), (0, 10)), ((6, 10), (0, 10))]
    assert from_basic_term(s, "A1", "<", 0).is_empty()
    assert from_basic_term(s, "A2", ">=", 9).boxes == [((0, 10), (9, 10))]
    with pytest.raises(DomainError):
        from_basic_term(s, "A1", "=", 10)
    with pytest.raises(DomainError):
        from_basic_term(s, "B", "=", 1)


def test_cross_attribute_term_keeps_residual():
    region, residual = from_expr(Compare("<", C("A1"), C("A2")), SPACE)
    assert region.boxes == [SPACE.domains]
    assert residual == Compare("<", C("A1"), C("A2"))


def test_self_comparison_is_whole_space():
    region, residual = from_expr(Compare("=", C("A1"), C("A1")), SPACE)
    assert region.boxes == [SPACE.domains] and residual is None
    region, _ = from_expr(Compare("<", C("A1"), C("A1")), SPACE)
    assert region.is_empty()


def test_linear_term_folds_to_exact_box():
    e = Compare("<", Arith("+", C("A1"), L(1)), L(4))
    region, residual = from_expr(e, SPACE)
    assert residual is None
    assert region.boxes == [((0, 3), (0, 16), (0, 16))]
    e = Compare(">", L(4), Arith("-", L(10), C("A2")))
    region, residual = from_expr(e, SPACE)
    assert residual is None and region.boxes == [((0, 16), (7, 16), (0, 16))]


def test_contradiction_is_empty():
    e = And(Compare("=", C("A1"), L(3)), Compare("=", C("A1"), L(4)))
    region, residual = from_expr(e, SPACE)
    assert region.is_empty() and residual is None


def test_de_morgan_example():
    e = Not(And(Compare("<", C("A1"), L(20)), Compare("=", C("A2"), L(0))))
    rewritten = Or(Compare(">=", C("A1"), L(20)), Compare("<>", C("A2"), L(0)))
    s = GridSpace.integers({"A1": (0, 39), "A2": (0, 9)})
    r1, res1 = from_expr(e, s)
    r2, res2 = from_expr(rewritten, s)
    assert res1 is None and res2 is None
    pts = [(a, b) for a in range(40) for b in range(10)]
    assert members(r1, pts) == members(r2, pts) == {(a, b) for a, b in pts if a >= 20 or b != 0}
    assert r1.is_disjoint()


def test_intersect_example():
    h = intersect(RegionSet([((0, 10), (0, 10))], 2), RegionSet([((5, 20), (5, 20))], 2))
    assert h.boxes == [((5, 10), (5, 10))]
    assert intersect(RegionSet([((0, 1), (0, 1))], 2), RegionSet([((1, 2), (1, 2))], 2)).is_empty()


def test_split_example():
    c1, c2 = ((0, 5), (0, 5)), ((2, 7), (2, 7))
    pieces = split(c1, c2)
    assert pieces[-1] == c1 and len(pieces) - 1 <= 3
    h = RegionSet(pieces, 2)
    assert h.is_disjoint()
    pts = lattice(2, 7)
    assert members(h, pts) == {p for p in pts if p[0] < 5 and p[1] < 5 or p[0] >= 2 and p[1] >= 2}


def test_split_nested_and_identical():
    big, small = ((0, 9), (0, 9)), ((2, 3), (4, 5))
    assert split(big, small) == [big]
    assert split(small, big) == [big]
    assert split(big, big) == [big]
    assert split(((0, 1), (0, 1)), ((3, 4), (3, 4))) == [((0, 1), (0, 1)), ((3, 4), (3, 4))]


def test_carve_prefers_one_sided_dimensions():
    # c2 sticks out of c1 on both sides of dim 0 but only above on dim 1
    c1, c2 = ((2, 4), (0, 4)), ((0, 6), (1, 8))
    first = carve(c1, c2)[0]
    assert first == ((0, 6), (4, 8))


def _boxes(k, n):
    iv = st.tuples(st.integers(0, n - 1), st.integers(1, n)).map(lambda t: (min(t), max(t)))
    iv = iv.filter(lambda t: t[0] < t[1])
    return st.tuples(*([iv] * k))


def _disjoint_set(boxes, k):
    h = RegionSet([], k)
    for b in boxes:
        h = union(h, RegionSet([b], k))
    return h


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4).flatmap(lambda k: st.tuples(st.just(k), _boxes(k, 5), _boxes(k, 5))))
def test_split_bound_and_cover(args):
    k, c1, c2 = args
    pieces = split(c1, c2)
    assert len([p for p in pieces if p != c1]) <= 2 ** k - 1
    h = RegionSet(pieces, k)
    assert h.is_disjoint()
    pts = lattice(k, 5)
    want = {p for p in pts if all(lo <= x < hi for (lo, hi), x in zip(c1, p))
            or all(lo <= x < hi for (lo, hi), x in zip(c2, p))}
    assert members(h, pts) == want


@settings(max_examples=100, deadline=None)
@given(st.lists(_boxes(3, 6), max_size=5), st.lists(_boxes(3, 6), max_size=5))
def test_union_and_intersect_membership(bs1, bs2):
    h1, h2 = _disjoint_set(bs1, 3), _disjoint_set(bs2, 3)
    pts = lattice(3, 6)
    m1, m2 = members(h1, pts), members(h2, pts)
    u, i = union(h1, h2), intersect(h1, h2)
    assert u.is_disjoint() and i.is_disjoint()
    assert members(u, pts) == m1 | m2
    assert members(i, pts) == m1 & m2


def test_union_of_disjoint_is_concatenation_and_idempotent():
    a = RegionSet([((0, 2), (0, 2))], 2)
    b = RegionSet([((5, 6), (5, 6))], 2)
    assert union(a, b).boxes == a.boxes + b.boxes
    assert union(a, a).boxes == a.boxes


@pytest.mark.parametrize("seed", range(4))
def test_from_expr_matches_lattice(seed):
    rng = seeded(100 + seed)
    for _ in range(50):
        e = named_expr(rng, NAMES)
        region, residual = from_expr(e, SPACE)
        assert region_mismatches(region, residual, e, NAMES, BOUNDS) == []


def test_non_grid_columns_become_residual():
    space = GridSpace.integers({"A1": (0, 7), "A2": (0, 7)})
    names, bounds = ("A1", "A2", "X"), ((0, 7),) * 3
    rng = seeded(7)
    for _ in range(60):
        e = named_expr(rng, names, lo=0, hi=7)
        region, residual = from_expr(e, space)
        # lift the 2-d region into the 3-d lattice by giving X the full range
        lifted = RegionSet([b + ((0, 8),) for b in region.boxes], 3)
        assert region_mismatches(lifted, residual, e, names, bounds) == []


def test_safety_valve_falls_back_to_bounding_box():
    e = None
    for v in range(0, 16, 2):
        t = Compare("=", C("A1"), L(v))
        e = t if e is None else Or(e, t)
    region, residual = from_expr(e, SPACE, limit=3)
    assert len(region) <= 3 and residual is not None
    assert region_mismatches(region, residual, e, NAMES, BOUNDS) == []
    exact, none = from_expr(e, SPACE)
    assert len(exact) == 8 and none is None


def test_char_space_terms():
    schema = RelationSchema("B", (char("T", 8), integer("Y")))
    space = GridSpace.for_schema(schema)
    e = And(Compare(">=", Column("T", attr=0), L("DIST")), Compare("<", Column("T", attr=0), L("E")))
    region, residual = from_expr(e, space)
    assert residual is None
    t = schema.attributes[0]
    for word, inside in [("DISTRIB", True), ("DIS", False), ("E", False), ("DZZ", True)]:
        assert region.contains((t.key(word), space.dims[1].key(0))) is inside


def test_box_intersection_is_half_open():
    assert box_intersection(((0, 5),), ((5, 9),)) is None
    assert box_intersection(((0, 6),), ((5, 9),)) == ((5, 6),)
