"""Splitting-policy experiment on seeded, BOOKS-shaped synthetic data.

The same tuples are loaded under both splitting policies, once with all six
attributes in the grid (BOOKS) and once with three (SMALLBOOKS).  The report
lists bucket occupancy, directory redundancy and partitions per attribute,
followed by the page reads of a fixed set of queries.
"""

from __future__ import annotations

import csv
import io
import random
import string
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .database import Database
from .gridfile import SplitPolicy
from .schema import RelationSchema, char, integer

BOOKS_ATTRS = (
    char("ACNO", 5),
    char("TITLE", 50),
    char("AUTHOR", 25),
    char("CLASSNO", 5),
    char("PUBLISHER", 25),
    integer("YEAR"),
)
ATTR_NAMES = tuple(a.name for a in BOOKS_ATTRS)
SMALL_GRID = ("TITLE", "AUTHOR", "YEAR")

QUERIES = (
    "TITLE = 'DISTRIBUTED CONTROL'",
    "AUTHOR = 'ULMAN'",
    "YEAR = 80",
    "(YEAR = 80) and (TITLE = 'DISTRIBUTED CONTROL')",
)

_LETTERS = string.ascii_uppercase
_PRINTABLE = "".join(chr(c) for c in range(0x21, 0x7F))
_PREFIX = {"ACNO": "Q", "TITLE": "THE ", "AUTHOR": "MMMMMM", "CLASSNO": "K",
           "PUBLISHER": "PUBLISHING HOUSE "}


def books_schema(name="BOOKS", grid=ATTR_NAMES, capacity=None) -> RelationSchema:
    return RelationSchema(name, BOOKS_ATTRS, tuple(ATTR_NAMES.index(g) for g in grid), capacity)


@dataclass(frozen=True)
class DatasetSpec:
    """Tuple count, seed and a distribution name per attribute.

    ``uniform`` draws every character from the whole printable range,
    ``constant-prefix`` glues random letters to a long fixed prefix (YEAR: a
    narrow range), ``zipf`` draws from a small pool with Zipf weights.
    """

    ntuples: int = 2000
    seed: int = 0
    distributions: dict = field(default_factory=lambda: {
        "ACNO": "constant-prefix", "TITLE": "uniform", "AUTHOR": "constant-prefix",
        "CLASSNO": "constant-prefix", "PUBLISHER": "constant-prefix",
        "YEAR": "constant-prefix",
    })
    planted_every: int = 250  # one tuple in this many matches the fixed queries


def _char_value(rng, attr, dist, pool):
    w = attr.width
    if dist == "uniform":
        return "".join(rng.choice(_PRINTABLE) for _ in range(w))
    if dist == "zipf":
        return rng.choices(pool, weights=[1 / (i + 1) for i in range(len(pool))])[0]
    prefix = _PREFIX[attr.name][: max(0, w - 2)]
    tail = "".join(rng.choice(_LETTERS) for _ in range(w - len(prefix)))
    return prefix + tail


def generate(spec: DatasetSpec) -> list:
    rng = random.Random(spec.seed)
    pools = {
        a.name: ["".join(rng.choice(_LETTERS) for _ in range(min(a.width, 8))) for _ in range(40)]
        for a in BOOKS_ATTRS
    }
    rows = []
    for n in range(spec.ntuples):
        row = []
        for a in BOOKS_ATTRS:
            dist = spec.distributions.get(a.name, "uniform")
            if a.name == "YEAR":
                if dist == "uniform":
                    row.append(rng.randint(-(10 ** 9), 10 ** 9))
                elif dist == "zipf":
                    weights = [1 / (i + 1) for i in range(30)]
                    row.append(60 + rng.choices(range(30), weights=weights)[0])
                else:
                    row.append(rng.randint(60, 89))
            else:
                row.append(_char_value(rng, a, dist, pools[a.name]))
        if spec.planted_every and n % spec.planted_every == 0:
            row[1], row[2], row[5] = "DISTRIBUTED CONTROL", "ULMAN", 80
        rows.append(tuple(row))
    return rows


@dataclass
class ExperimentReport:
    structure: list  # dicts: relation, policy, tuples, buckets, occupancy, redundancy, parts
    queries: list  # dicts: query, relation, policy, dir_reads, data_reads

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["relation", "policy", "tuples", "buckets", "occupancy_pct", "redundancy",
                    *(f"partitions_{n}" for n in ATTR_NAMES)])
        for s in self.structure:
            w.writerow([s["relation"], s["policy"], s["tuples"], s["buckets"],
                        f"{100 * s['occupancy']:.1f}", f"{s['redundancy']:.2f}",
                        *(s["partitions"].get(n, "") for n in ATTR_NAMES)])
        w.writerow([])
        w.writerow(["query", "relation", "policy", "rows", "dir_reads", "data_reads", "reads"])
        for q in self.queries:
            w.writerow([q["query"], q["relation"], q["policy"], q["rows"], q["dir_reads"],
                        q["data_reads"], q["dir_reads"] + q["data_reads"]])
        return buf.getvalue()

    def stat(self, relation, policy):
        return next(s for s in self.structure
                    if s["relation"] == relation and s["policy"] == SplitPolicy(policy).value)


def run_experiment(spec: DatasetSpec = DatasetSpec(), workdir=None, page_size=4096,
                   capacity=None, relations=(("BOOKS", ATTR_NAMES), ("SMALLBOOKS", SMALL_GRID)),
                   queries=QUERIES) -> ExperimentReport:
    rows = generate(spec)
    structure, measured = [], []
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(workdir or tmp)
        for policy in SplitPolicy:
            for name, grid in relations:
                dbdir = root / f"{name.lower()}-{policy.value}"
                with Database(dbdir, policy=policy, page_size=page_size, create=True) as db:
                    gf = db.create_table(books_schema(name, grid, capacity))
                    for r in rows:
                        gf.insert(r)
                    st = gf.stats()
                    structure.append({
                        "relation": name, "policy": policy.value, "tuples": st.tuples,
                        "buckets": st.buckets, "occupancy": st.occupancy,
                        "redundancy": st.redundancy,
                        "partitions": {gf.schema.grid_attribute(d).name: st.partitions[d]
                                       for d in range(gf.k)},
                    })
                    for q in queries:
                        db.reset_access()
                        res = db.execute(f"SELECT * FROM {name} WHERE {q}")
                        measured.append({
                            "query": q, "relation": name, "policy": policy.value,
                            "rows": len(res.rows), "dir_reads": db.stats.dir_reads,
                            "data_reads": db.stats.data_reads,
                        })
    return ExperimentReport(structure, measured)
