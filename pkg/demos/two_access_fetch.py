"""Build one grid file and watch what a point query costs.

    python demos/two_access_fetch.py
"""

import random
import tempfile

from gridrel import GridFile, RelationSchema, SplitPolicy, char, integer


def main():
    schema = RelationSchema("PARTS", (integer("ID"), integer("WEIGHT"), char("NAME", 12)),
                            grid_attrs=(0, 1))
    rng = random.Random(7)
    with tempfile.TemporaryDirectory() as tmp:
        gf = GridFile.create(tmp, schema, SplitPolicy.MIDPOINT_FIRST)
        rows = [(i, rng.randint(1, 5000), f"part-{i}") for i in range(3000)]
        for r in rows:
            gf.insert(r)

        st = gf.stats()
        print(f"{st.tuples} tuples in {st.buckets} buckets, "
              f"occupancy {st.occupancy:.0%}, redundancy {st.redundancy:.2f}")
        print("partitions per grid attribute:", dict(zip(("ID", "WEIGHT"), st.partitions)))

        # scales live in memory, so a point query is one directory page plus one bucket
        target = rows[1234]
        gf.store.reset_stats()
        print("found:", gf.point_query(target[:2]))
        s = gf.store.stats
        print(f"directory reads {s.dir_reads}, data reads {s.data_reads}")
        gf.close()


if __name__ == "__main__":
    main()
