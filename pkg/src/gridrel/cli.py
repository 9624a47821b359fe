"""Command-line shell: interactive REPL, script runner and experiment driver."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass

from .database import Database
from .errors import GridRelError
from .experiment import DatasetSpec, run_experiment
from .gridfile import SplitPolicy
from .query.lexer import is_complete, split_statements
from .storage import DEFAULT_PAGE_SIZE

EXIT_OK, EXIT_STATEMENT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_CACHE_PAGES = 64

HELP = """\
statements end with ';'
.stats            grid statistics per relation
.access           page accesses since the last .reset
.reset            zero the access counters
.explain <query>  show the plan of a SELECT
.quit             leave"""


@dataclass
class SessionConfig:
    db: str
    policy: SplitPolicy = SplitPolicy.MIDPOINT_FIRST
    page_size: int = DEFAULT_PAGE_SIZE
    cache: bool = True
    fmt: str = "aligned"
    strict: bool = False


def format_rows(columns, rows, fmt) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)
        return buf.getvalue().rstrip("\n")
    cells = [[str(v) for v in r] for r in rows]
    widths = [len(c) for c in columns]
    for r in cells:
        widths = [max(w, len(v)) for w, v in zip(widths, r)]
    line = " | ".join(c.ljust(w) for c, w in zip(columns, widths))
    out = [line.rstrip(), "-+-".join("-" * w for w in widths)]
    out += [" | ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells]
    out.append(f"({len(rows)} row{'s' if len(rows) != 1 else ''})")
    return "\n".join(out)


def format_stats(db) -> str:
    lines = []
    for name, st in db.grid_stats().items():
        gf = db.relation(name)
        parts = " ".join(
            f"{gf.schema.grid_attribute(d).name}={n}" for d, n in enumerate(st.partitions)
        )
        lines.append(
            f"{name}: tuples={st.tuples} buckets={st.buckets} "
            f"occupancy={100 * st.occupancy:.0f}% redundancy={st.redundancy:.2f} "
            f"partitions: {parts}"
        )
    return "\n".join(lines) if lines else "no relations"


def format_access(stats) -> str:
    return (
        f"page reads: {stats.reads} (directory {stats.dir_reads}, data {stats.data_reads}, "
        f"scales {stats.scale_reads})\n"
        f"page writes: {stats.writes} (directory {stats.dir_writes}, data {stats.data_writes}, "
        f"scales {stats.scale_writes})"
    )


class Session:
    """Feeds lines to a database; tracks partial statements and the failure state."""

    def __init__(self, db: Database, out, config: SessionConfig):
        self.db = db
        self.out = out
        self.config = config
        self.buffer = ""
        self.failed = False
        self.done = False

    def emit(self, text: str) -> None:
        print(text, file=self.out)

    def error(self, exc) -> None:
        self.failed = True
        print(f"error: {exc}", file=self.out)

    @property
    def pending(self) -> bool:
        return bool(self.buffer.strip())

    def feed(self, line: str) -> None:
        if not self.pending and line.strip().startswith("."):
            self.dot(line.strip())
            return
        self.buffer += line if line.endswith("\n") else line + "\n"
        if is_complete(self.buffer):
            text, self.buffer = self.buffer, ""
            self.run(text)

    def finish(self) -> None:
        if self.pending:
            text, self.buffer = self.buffer, ""
            self.run(text)

    def run(self, text: str) -> None:
        for _, stmt in split_statements(text):
            try:
                result = self.db.execute(stmt)
            except GridRelError as exc:
                self.error(exc)
                if self.config.strict:
                    return
                continue
            if result.kind == "SELECT":
                self.emit(format_rows(result.columns, result.rows, self.config.fmt))
            else:
                self.emit(result.message)

    def dot(self, line: str) -> None:
        cmd, _, arg = line.partition(" ")
        cmd = cmd.lower()
        if cmd in (".quit", ".exit"):
            self.done = True
        elif cmd == ".stats":
            self.emit(format_stats(self.db))
        elif cmd == ".access":
            self.emit(format_access(self.db.stats))
        elif cmd == ".reset":
            self.db.reset_access()
        elif cmd == ".explain":
            try:
                self.emit(self.db.explain(arg.strip().rstrip(";")))
            except (GridRelError, TypeError) as exc:
                self.error(exc)
        elif cmd == ".help":
            self.emit(HELP)
        else:
            self.error(f"unknown command {cmd}; try .help")

    def stop(self) -> bool:
        return self.done or (self.failed and self.config.strict)


def open_database(config: SessionConfig) -> Database:
    return Database(
        config.db, policy=config.policy, page_size=config.page_size,
        cache_pages=DEFAULT_CACHE_PAGES if config.cache else 0,
    )


def run_lines(lines, config: SessionConfig, out) -> int:
    with open_database(config) as db:
        s = Session(db, out, config)
        for line in lines:
            s.feed(line)
            if s.stop():
                break
        else:
            s.finish()
        return EXIT_STATEMENT if s.failed and config.strict else EXIT_OK


def run_script(path, config: SessionConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        print(f"error: cannot read script: {exc}", file=sys.stderr)
        return EXIT_IO
    return run_lines(lines, config, out)


def repl(config: SessionConfig, stdin=None, out=None) -> int:
    stdin = stdin or sys.stdin
    out = out or sys.stdout
    interactive = stdin.isatty()
    with open_database(config) as db:
        s = Session(db, out, config)
        if interactive:
            print('grid-file relational shell; ".help" lists commands', file=out)
        while not s.stop():
            if interactive:
                print("   ...> " if s.pending else "gridrel> ", end="", file=out, flush=True)
            line = stdin.readline()
            if not line:
                s.finish()
                break
            s.feed(line)
        return EXIT_STATEMENT if s.failed and config.strict else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridrel", description="Relational shell over grid files.")
    p.add_argument("--db", metavar="PATH", help="database directory (created if missing)")
    p.add_argument("--policy", choices=[x.value for x in SplitPolicy], default="midpoint",
                   help="splitting policy for a new database")
    p.add_argument("--page-size", type=int, default=DEFAULT_PAGE_SIZE, metavar="N")
    p.add_argument("--no-cache", action="store_true", help="disable the page cache")
    p.add_argument("--script", metavar="FILE", help="run statements from FILE")
    p.add_argument("--strict", action="store_true", help="stop at the first failing statement")
    p.add_argument("--format", choices=["aligned", "csv"], default="aligned")
    p.add_argument("--seed", type=int, default=0, help="seed for generated datasets")
    p.add_argument("--experiment", action="store_true",
                   help="run the splitting-policy experiment and print CSV")
    p.add_argument("--tuples", type=int, default=2000, metavar="N",
                   help="tuples generated by --experiment")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.experiment:
        if args.tuples < 0:
            print("error: --tuples must be non-negative", file=sys.stderr)
            return EXIT_USAGE
        report = run_experiment(DatasetSpec(ntuples=args.tuples, seed=args.seed),
                                workdir=args.db, page_size=args.page_size)
        sys.stdout.write(report.to_csv())
        return EXIT_OK
    if not args.db:
        print("error: --db is required", file=sys.stderr)
        return EXIT_USAGE
    config = SessionConfig(args.db, SplitPolicy(args.policy), args.page_size,
                           not args.no_cache, args.format, args.strict)
    try:
        if args.script:
            return run_script(args.script, config)
        return repl(config)
    except GridRelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
