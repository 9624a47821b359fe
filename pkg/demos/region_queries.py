"""Turn predicates into disjoint boxes and scan only the buckets they touch.

    python demos/region_queries.py
"""

import random
import tempfile

from gridrel import GridFile, RelationSchema, integer
from gridrel.expr import evaluate
from gridrel.query import parse_expr
from gridrel.query.planner import render_region
from gridrel.region import from_expr

QUERIES = [
    "X < 100 AND Y >= 900",
    "X < 100 OR Y < 100",
    "NOT (X < 500 AND Y = 0)",
    "X + 10 < 60",
    "X < Y",
]


def main():
    schema = RelationSchema("PTS", (integer("X"), integer("Y")))
    rng = random.Random(1)
    with tempfile.TemporaryDirectory() as tmp:
        gf = GridFile.create(tmp, schema)
        for _ in range(4000):
            gf.insert((rng.randint(0, 999), rng.randint(0, 999)))
        total = gf.stats().buckets
        for text in QUERIES:
            # unanalysed columns carry only a name, which the grid space resolves
            node = parse_expr(text)
            region, residual = from_expr(node, gf.space)
            gf.store.reset_stats()
            n = sum(1 for _ in gf.scan_region(region, _residual(residual)))
            print(text)
            print(f"  boxes: {render_region(region, schema)}")
            print(f"  residual: {'none' if residual is None else 'checked per tuple'}")
            print(f"  {n} rows from {gf.store.stats.data_reads} of {total} buckets")
        gf.close()


def _residual(node):
    if node is None:
        return None
    return lambda t: evaluate(node, lambda c: t["XY".index(c.name)])


if __name__ == "__main__":
    main()
