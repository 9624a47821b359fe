"""Session-level entry point: open a database directory and run statements."""

from __future__ import annotations

from dataclasses import dataclass, field

from .gridfile import SplitPolicy
from .query.analyzer import AnalyzedSelect, Analyzer
from .query.ast import CreateTable, DropTable, Select
from .query.catalog import Catalog
from .query.executor import Executor
from .query.lexer import split_statements
from .query.parser import parse
from .query.planner import explain, plan
from .storage import DEFAULT_PAGE_SIZE, AccessStats


@dataclass
class Result:
    kind: str  # SELECT | INSERT | DELETE | UPDATE | CREATE | DROP
    columns: tuple = ()
    rows: list = field(default_factory=list)
    count: int | None = None

    @property
    def message(self) -> str:
        if self.kind == "SELECT":
            return f"{len(self.rows)} row{'s' if len(self.rows) != 1 else ''}"
        if self.kind in ("CREATE", "DROP"):
            return f"{self.kind} TABLE ok"
        verb = {"INSERT": "inserted", "DELETE": "deleted", "UPDATE": "updated"}[self.kind]
        return f"{self.count} row{'s' if self.count != 1 else ''} {verb}"


class Database:
    """A directory of grid-file relations plus their catalog."""

    def __init__(self, path, *, policy=SplitPolicy.MIDPOINT_FIRST, page_size=DEFAULT_PAGE_SIZE,
                 cache_pages=0, create=None, bucket_capacity=None):
        self.stats = AccessStats()
        self.catalog = Catalog(path, policy=policy, page_size=page_size, stats=self.stats,
                               cache_pages=cache_pages, create=create,
                               bucket_capacity=bucket_capacity)
        self.analyzer = Analyzer(self.catalog)
        self.executor = Executor(self.catalog)
        self.stats.reset()

    @property
    def policy(self) -> SplitPolicy:
        return self.catalog.policy

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        self.catalog.close()

    def relation(self, name: str):
        return self.catalog.relation(name.upper())

    def create_table(self, schema):
        return self.catalog.create(schema)

    def grid_stats(self) -> dict:
        return {n: self.catalog.files[n].stats() for n in self.catalog.user_relations()}

    def reset_access(self) -> None:
        self.stats.reset()

    # ---- statements --------------------------------------------------------

    def prepare(self, text: str, force_nested=False):
        stmt = parse(text) if isinstance(text, str) else text
        if not isinstance(stmt, Select):
            raise TypeError("only SELECT statements can be planned")
        return plan(self.analyzer.analyze(stmt), self.catalog, force_nested)

    def explain(self, text: str, force_nested=False) -> str:
        return explain(self.prepare(text, force_nested))

    def execute(self, text, force_nested=False) -> Result:
        stmt = parse(text) if isinstance(text, str) else text
        analyzed = self.analyzer.analyze(stmt)
        if isinstance(analyzed, AnalyzedSelect):
            p = plan(analyzed, self.catalog, force_nested)
            return Result("SELECT", analyzed.headers, self.executor.select(p))
        if isinstance(stmt, CreateTable):
            self.catalog.create(analyzed)
            return Result("CREATE")
        if isinstance(stmt, DropTable):
            self.catalog.drop(stmt.name)
            return Result("DROP")
        count = getattr(self.executor, analyzed.kind.lower())(analyzed)
        return Result(analyzed.kind, count=count)

    def execute_script(self, text: str) -> list:
        return [self.execute(s) for _, s in split_statements(text)]

    def flush(self) -> None:
        self.catalog.flush()
