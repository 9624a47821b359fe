"""Evaluation of planned queries and of data-manipulation statements."""

from __future__ import annotations

import itertools

from ..expr import evaluate
from ..region import from_expr


def tuple_filter(residual):
    """Per-tuple predicate for a single-relation residual (or None)."""
    if residual is None:
        return None
    return lambda t: evaluate(residual, lambda c: t[c.attr])


def row_lookup(row):
    return lambda c: row[c.rel][c.attr]


def runs(stream, key):
    """Group a sorted stream into ``(key, [items])`` runs."""
    for k, items in itertools.groupby(stream, key=key):
        yield k, list(items)


def merge_join(streams, keys):
    """Multi-way merge of sorted streams on equal keys.

    Yields ``(key, [run of stream 0, run of stream 1, ...])`` in ascending key
    order; the caller forms the cross product of the runs.
    """
    its = [runs(s, k) for s, k in zip(streams, keys)]
    cur = [next(it, None) for it in its]
    while all(c is not None for c in cur):
        top = max(c[0] for c in cur)
        if all(c[0] == top for c in cur):
            yield top, [c[1] for c in cur]
            cur = [next(it, None) for it in its]
        else:
            cur = [next(it, None) if c[0] < top else c for it, c in zip(its, cur)]


class Executor:
    def __init__(self, catalog):
        self.catalog = catalog

    def gridfile(self, plan, rel):
        return self.catalog.relation(plan.query.tables[rel].schema.name)

    # ---- per-group batch streams -----------------------------------------

    def sorted_stream(self, plan, rel, attr):
        a = plan.accesses[rel]
        gf = self.gridfile(plan, rel)
        keep = tuple_filter(a.residual)
        dim = gf.schema.dim_of(attr)
        if dim is not None:
            return gf.ordered_scan(dim, a.region, keep)
        return iter(sorted(gf.scan_region(a.region, keep), key=lambda t: t[attr]))

    def group_batches(self, plan, group):
        """Batches of partial rows (dict rel -> tuple) produced by one group."""
        if group.method == "scan":
            (rel,) = group.members
            a = plan.accesses[rel]
            gf = self.gridfile(plan, rel)
            for batch in gf.scan_buckets(a.region, tuple_filter(a.residual)):
                yield [{rel: t} for t in batch]
            return
        members = group.members
        streams = [self.sorted_stream(plan, r, group.attrs[r]) for r in members]
        keys = [(lambda t, i=group.attrs[r]: t[i]) for r in members]
        for _, run_lists in merge_join(streams, keys):
            yield [dict(zip(members, combo)) for combo in itertools.product(*run_lists)]

    # ---- SELECT ------------------------------------------------------------

    def rows(self, plan):
        """Full rows (tuple of per-relation tuples, FROM order), unordered."""
        n = len(plan.accesses)
        if any(a.region.is_empty() for a in plan.accesses):
            return
        terms = [[] for _ in plan.groups]
        for lvl, t in plan.join_terms:
            terms[lvl].append(t)

        def extend(level, prefix):
            for batch in self.group_batches(plan, plan.groups[level]):
                out = []
                for p in prefix:
                    for part in batch:
                        row = dict(p)
                        row.update(part)
                        if terms[level]:
                            look = row_lookup(row)
                            if not all(evaluate(t, look) for t in terms[level]):
                                continue
                        out.append(row)
                if not out:
                    continue
                if level + 1 == len(plan.groups):
                    for row in out:
                        yield tuple(row[i] for i in range(n))
                else:
                    yield from extend(level + 1, out)

        yield from extend(0, [{}])

    def select(self, plan):
        q = plan.query
        if q.order_by is not None and len(plan.accesses) == 1:
            gf = self.gridfile(plan, 0)
            dim = gf.schema.dim_of(q.order_by.attr)
            if dim is not None:
                a = plan.accesses[0]
                if a.region.is_empty():
                    ordered = []
                else:
                    ordered = [(t,) for t in gf.ordered_scan(dim, a.region,
                                                            tuple_filter(a.residual))]
                if q.descending:
                    ordered.reverse()
                return [self.project(q, r) for r in ordered]
        full = list(self.rows(plan))
        if q.order_by is not None:
            c = q.order_by
            full.sort(key=lambda r: r[c.rel][c.attr], reverse=q.descending)
        return [self.project(q, r) for r in full]

    @staticmethod
    def project(q, row):
        return tuple(row[c.rel][c.attr] for c in q.columns)

    # ---- writes ------------------------------------------------------------

    def _where(self, gf, where):
        region, residual = from_expr(where, gf.space)
        return region, tuple_filter(residual)

    def insert(self, w) -> int:
        gf = self.catalog.relation(w.schema.name)
        for row in w.rows:
            gf.insert(row)
        return len(w.rows)

    def delete(self, w) -> int:
        gf = self.catalog.relation(w.schema.name)
        region, keep = self._where(gf, w.where)
        if region.is_empty():
            return 0
        return gf.delete_where(region, keep)

    def update(self, w) -> int:
        gf = self.catalog.relation(w.schema.name)
        region, keep = self._where(gf, w.where)
        if region.is_empty():
            return 0
        taken = gf.take_where(region, keep)
        for t in taken:
            new = list(t)
            for attr, value in w.assignments:
                new[attr] = value
            gf.insert(tuple(new))
        return len(taken)
