"""SQL over grid files: a merge join, a nested loop, and their page reads.

    python demos/joins.py
"""

import random
import tempfile

from gridrel import Database


def main():
    rng = random.Random(3)
    with tempfile.TemporaryDirectory() as tmp:
        db = Database(tmp, bucket_capacity=8)
        db.execute_script("""
            CREATE TABLE AUTHORS (NAME CHAR(10), BORN INTEGER) GRID (NAME);
            CREATE TABLE BOOKS (TITLE CHAR(20), AUTHOR CHAR(10), YEAR INTEGER)
                GRID (AUTHOR, YEAR);
        """)
        names = [f"AUTH{i:03d}" for i in range(200)]
        db.execute("INSERT INTO AUTHORS VALUES " + ", ".join(
            f"('{n}', {rng.randint(1900, 1960)})" for n in names))
        db.execute("INSERT INTO BOOKS VALUES " + ", ".join(
            f"('BOOK {i}', '{rng.choice(names)}', {rng.randint(1950, 1990)})" for i in range(600)))

        query = ("SELECT B.TITLE, A.BORN FROM BOOKS B, AUTHORS A "
                 "WHERE B.AUTHOR = A.NAME AND B.YEAR >= 1985")
        print(db.explain(query))
        print()
        for nested in (False, True):
            db.reset_access()
            rows = db.execute(query, force_nested=nested).rows
            label = "nested loop" if nested else "merge join"
            print(f"{label}: {len(rows)} rows, {db.stats.data_reads} data page reads")
        db.close()


if __name__ == "__main__":
    main()
