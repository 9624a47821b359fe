"""Join planning: per-relation regions, merge groups and the nested order.

The FROM relations are split greedily, in query term order, into disjoint
groups.  Two relations may share a group only when an equijoin term links
them on their designated join attributes and no other term relates them.
Each group is evaluated by a multi-way merge join (or a plain region scan
when it has one member); groups are combined by a block nested loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..expr import Column, Compare, columns, conjoin, conjuncts, dump, push_not
from ..region import RegionSet, from_expr
from ..schema import INT_OFFSET, AttrType


@dataclass
class Access:
    """How one FROM relation is read: region plus per-tuple residual."""

    rel: int
    label: str
    region: RegionSet
    residual: object
    buckets: int


@dataclass
class Group:
    members: list
    attrs: dict = field(default_factory=dict)  # rel -> join attribute index

    @property
    def method(self) -> str:
        return "merge" if len(self.members) > 1 else "scan"


@dataclass(frozen=True)
class CostEstimate:
    nested: int
    merge: int


@dataclass
class JoinPlan:
    query: object  # AnalyzedSelect
    accesses: list
    groups: list  # in nested-loop order, outermost first
    join_terms: list  # (level, term): checked once groups[0..level] are bound
    absorbed: list  # equijoin terms enforced by merge groups
    terms: list  # every multi-relation conjunct, in query order
    cost: CostEstimate
    forced_nested: bool = False

    @property
    def order(self) -> list:
        return [r for g in self.groups for r in g.members]


def equijoin(term):
    """``(i, a, j, b)`` if ``term`` is ``Ri.a = Rj.b`` with i != j, else None."""
    if (isinstance(term, Compare) and term.op == "="
            and isinstance(term.left, Column) and isinstance(term.right, Column)
            and term.left.rel != term.right.rel):
        return term.left.rel, term.left.attr, term.right.rel, term.right.attr
    return None


def _rels(term) -> frozenset:
    return frozenset(c.rel for c in columns(term))


def group_violations(attrs: dict, terms) -> list:
    """Reasons why relations ``attrs`` (rel -> join attr) may not form one group."""
    problems = []
    members = list(attrs)
    for x in range(len(members)):
        for y in range(x + 1, len(members)):
            i, j = members[x], members[y]
            a, b = attrs[i], attrs[j]
            linked = False
            for t in terms:
                if not {i, j} <= _rels(t):
                    continue
                e = equijoin(t)
                if e is not None and {(e[0], e[1]), (e[2], e[3])} == {(i, a), (j, b)}:
                    linked = True
                    continue
                if e is not None:
                    problems.append(f"(iii) {dump(t)} relates {i},{j} on other attributes")
                else:
                    problems.append(f"(iii/v) {dump(t)} is not a pure equijoin of {i},{j}")
            if not linked:
                problems.append(f"(ii) no equijoin term links {i} and {j}")
    for i in members:
        for t in terms:
            rels = _rels(t)
            if i not in rels:
                continue
            if any(c.rel == i and c.attr != attrs[i] for c in columns(t)):
                for k in rels - {i}:
                    if k in attrs:
                        problems.append(f"(iv) {dump(t)} joins {i} to member {k} off attribute")
    return problems


def check_plan(plan: JoinPlan) -> list:
    """Structural audit of a plan; returns a list of violated conditions."""
    n = len(plan.accesses)
    problems = []
    seen = [r for g in plan.groups for r in g.members]
    if sorted(seen) != list(range(n)):
        problems.append("(i) relations not partitioned into groups")
    for g in plan.groups:
        if len(g.members) > 1:
            problems.extend(group_violations(g.attrs, plan.terms))
    return problems


def _size(access) -> int:
    return access.buckets


def estimate(buckets_in_order, merge_buckets) -> CostEstimate:
    nested, prod = 0, 1
    for b in buckets_in_order:
        prod *= b
        nested += prod
    merge = sum(b + b * math.ceil(math.log2(max(b, 2))) for b in merge_buckets)
    return CostEstimate(nested, merge)


def plan(query, catalog, force_nested=False) -> JoinPlan:
    n = len(query.tables)
    local = [[] for _ in range(n)]
    multi = []
    for t in conjuncts(push_not(query.where) if query.where is not None else None):
        rels = _rels(t)
        if len(rels) <= 1:
            local[next(iter(rels)) if rels else 0].append(t)
        else:
            multi.append(t)

    accesses = []
    for i, b in enumerate(query.tables):
        gf = catalog.relation(b.schema.name)
        region, residual = from_expr(conjoin(local[i]), gf.space)
        accesses.append(Access(i, b.label, region, residual, gf.nbuckets))

    groups, group_of = [], {}
    if not force_nested:
        for t in multi:
            e = equijoin(t)
            if e is None:
                continue
            i, a, j, b = e
            gi, gj = group_of.get(i), group_of.get(j)
            if gi is None and gj is None:
                cand = {i: a, j: b}
                if not group_violations(cand, multi):
                    groups.append(Group([i, j], cand))
                    group_of[i] = group_of[j] = len(groups) - 1
            elif (gi is None) != (gj is None):
                g, (new, attr) = (gi, (j, b)) if gj is None else (gj, (i, a))
                have = (i, a) if gj is None else (j, b)
                grp = groups[g]
                if grp.attrs[have[0]] != have[1]:
                    continue
                cand = dict(grp.attrs)
                cand[new] = attr
                if not group_violations(cand, multi):
                    grp.members.append(new)
                    grp.attrs[new] = attr
                    group_of[new] = g
    for i in range(n):
        if i not in group_of:
            groups.append(Group([i]))
    groups.sort(key=lambda g: (sum(_size(accesses[r]) for r in g.members), min(g.members)))

    level_of = {r: lvl for lvl, g in enumerate(groups) for r in g.members}
    join_terms, absorbed = [], []
    for t in multi:
        e = equijoin(t)
        rels = _rels(t)
        if e is not None and len({level_of[r] for r in rels}) == 1:
            g = groups[level_of[e[0]]]
            if g.attrs.get(e[0]) == e[1] and g.attrs.get(e[2]) == e[3]:
                absorbed.append(t)
                continue
        join_terms.append((max(level_of[r] for r in rels), t))

    order = [r for g in groups for r in g.members]
    cost = estimate(
        [accesses[r].buckets for r in order],
        [accesses[r].buckets for g in groups if len(g.members) > 1 for r in g.members],
    )
    return JoinPlan(query, accesses, groups, join_terms, absorbed, multi, cost, force_nested)


# ---- EXPLAIN -----------------------------------------------------------------


def _show_key(attr, key) -> str:
    if attr.type is AttrType.INTEGER:
        return str(key - INT_OFFSET)
    raw = key.to_bytes(attr.key_width, "big").rstrip(b"\0")
    text = "".join(chr(c) if 0x20 <= c <= 0x7E and c != 0x27 else
                   ("''" if c == 0x27 else f"\\x{c:02x}") for c in raw).rstrip(" ")
    return f"'{text}'"


def render_region(region: RegionSet, schema) -> str:
    if region.is_empty():
        return "EMPTY"
    parts = []
    for box in region.boxes:
        conds = []
        for d, (lo, hi) in enumerate(box):
            attr = schema.grid_attribute(d)
            dlo, dhi = attr.domain
            if (lo, hi) == (dlo, dhi):
                continue
            if hi - lo == 1:
                conds.append(f"{attr.name} = {_show_key(attr, lo)}")
            elif lo == dlo:
                conds.append(f"{attr.name} < {_show_key(attr, hi)}")
            elif hi == dhi:
                conds.append(f"{attr.name} >= {_show_key(attr, lo)}")
            else:
                conds.append(f"{attr.name} in [{_show_key(attr, lo)}, {_show_key(attr, hi)})")
        parts.append("{" + (", ".join(conds) if conds else "ALL") + "}")
    return " | ".join(parts)


def explain(p: JoinPlan) -> str:
    q = p.query
    lines = []
    for a in p.accesses:
        schema = q.tables[a.rel].schema
        lines.append(f"relation {a.label} ({schema.name}, {a.buckets} buckets)")
        lines.append(f"  region: {render_region(a.region, schema)}")
        lines.append(f"  residual: {dump(a.residual)}")
    for lvl, g in enumerate(p.groups):
        names = ", ".join(p.accesses[r].label for r in g.members)
        if g.method == "merge":
            keys = " = ".join(
                f"{p.accesses[r].label}.{q.tables[r].schema.attributes[g.attrs[r]].name}"
                for r in g.members
            )
            lines.append(f"group {lvl + 1}: merge join on {keys} [{names}]")
        else:
            lines.append(f"group {lvl + 1}: region scan [{names}]")
    if len(p.groups) > 1:
        lines.append("nested loop: " + " > ".join(f"group {i + 1}" for i in range(len(p.groups))))
    for lvl, t in p.join_terms:
        lines.append(f"join filter at group {lvl + 1}: {dump(t)}")
    if q.order_by is not None:
        way = "DESC" if q.descending else "ASC"
        lines.append(f"order by: {q.order_by.table}.{q.order_by.name} {way}")
    lines.append(f"cost estimate: nested={p.cost.nested} merge={p.cost.merge}")
    return "\n".join(lines)
