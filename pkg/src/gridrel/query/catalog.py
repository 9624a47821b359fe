"""System catalog kept in two reserved grid-file relations.

RELCAT holds one row per user relation and ATTRCAT one row per attribute.
Both have fixed schemas and are loaded into memory when the database opens;
every later change is written through to them.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import CorruptFileError, RelationExistsError, RelationNotFoundError, SchemaError
from ..gridfile import GridFile, SplitPolicy
from ..region import from_basic_term
from ..schema import NAME_WIDTH, Attribute, AttrType, RelationSchema, char, integer
from ..storage import DEFAULT_PAGE_SIZE, AccessStats

META_FILE = "gridrel.json"
FORMAT_VERSION = 1

RELCAT = RelationSchema(
    "RELCAT",
    (char("RELNAME", NAME_WIDTH), integer("NATTRS"), integer("CAPACITY")),
    grid_attrs=(0,),
)
ATTRCAT = RelationSchema(
    "ATTRCAT",
    (
        char("RELNAME", NAME_WIDTH),
        integer("POS"),
        char("ATTNAME", NAME_WIDTH),
        integer("ATTTYPE"),
        integer("WIDTH"),
        integer("GRIDPOS"),
    ),
    grid_attrs=(0, 1),
)
SYSTEM = {"RELCAT": RELCAT, "ATTRCAT": ATTRCAT}

_TYPE_CODES = {AttrType.INTEGER: 0, AttrType.CHAR: 1}


def check_name(name: str, what: str) -> str:
    if not name or len(name) > NAME_WIDTH:
        raise SchemaError(f"{what} name {name!r} must be 1..{NAME_WIDTH} characters")
    return name


class Catalog:
    """Relations of one database directory, with their open grid files."""

    def __init__(self, directory, *, policy=SplitPolicy.MIDPOINT_FIRST,
                 page_size=DEFAULT_PAGE_SIZE, stats=None, cache_pages=0, create=None,
                 bucket_capacity=None):
        self.directory = Path(directory)
        self.stats = stats if stats is not None else AccessStats()
        self.cache_pages = cache_pages
        meta_path = self.directory / META_FILE
        if create is None:
            create = not meta_path.exists()
        self.schemas: dict[str, RelationSchema] = {}
        self.files: dict[str, GridFile] = {}
        if create:
            self.directory.mkdir(parents=True, exist_ok=True)
            if meta_path.exists():
                raise RelationExistsError(f"a database already exists in {self.directory}")
            self.meta = {
                "format": FORMAT_VERSION,
                "page_size": page_size,
                "policy": SplitPolicy(policy).value,
                "bucket_capacity": bucket_capacity,
            }
            for schema in SYSTEM.values():
                self.files[schema.name] = GridFile.create(
                    self.directory, schema, self.policy, page_size, self.stats, cache_pages
                )
                self.schemas[schema.name] = schema
            meta_path.write_text(json.dumps(self.meta, indent=2, sort_keys=True) + "\n")
        else:
            if not meta_path.exists():
                raise CorruptFileError(f"{self.directory} is not a database directory")
            self.meta = json.loads(meta_path.read_text())
            if self.meta.get("format") != FORMAT_VERSION:
                raise CorruptFileError(f"unsupported database format {self.meta.get('format')}")
            for schema in SYSTEM.values():
                self.files[schema.name] = GridFile.open(
                    self.directory, schema, self.stats, cache_pages
                )
                self.schemas[schema.name] = schema
            self._load()

    @property
    def policy(self) -> SplitPolicy:
        return SplitPolicy(self.meta["policy"])

    @property
    def page_size(self) -> int:
        return self.meta["page_size"]

    def _load(self) -> None:
        attrs: dict[str, list] = {}
        for relname, pos, attname, atttype, width, gridpos in self.files["ATTRCAT"].full_scan():
            attrs.setdefault(relname, []).append((pos, attname, atttype, width, gridpos))
        for relname, nattrs, capacity in self.files["RELCAT"].full_scan():
            rows = sorted(attrs.get(relname, []))
            if len(rows) != nattrs:
                raise CorruptFileError(f"catalog lists {len(rows)} attributes of {relname}")
            codes = {v: k for k, v in _TYPE_CODES.items()}
            attributes = tuple(Attribute(n, codes[t], w) for _, n, t, w, _ in rows)
            grid = sorted((g, p) for p, _, _, _, g in rows if g >= 0)
            schema = RelationSchema(relname, attributes, tuple(p for _, p in grid),
                                    capacity or None)
            self.schemas[relname] = schema
            self.files[relname] = GridFile.open(self.directory, schema, self.stats,
                                                self.cache_pages)

    # ---- public operations ---------------------------------------------------

    def user_relations(self) -> list:
        return sorted(n for n in self.schemas if n not in SYSTEM)

    def lookup(self, name: str) -> RelationSchema:
        try:
            return self.schemas[name]
        except KeyError:
            raise RelationNotFoundError(f"unknown relation {name}") from None

    def relation(self, name: str) -> GridFile:
        self.lookup(name)
        return self.files[name]

    def create(self, schema: RelationSchema) -> GridFile:
        check_name(schema.name, "relation")
        for a in schema.attributes:
            check_name(a.name, "attribute")
        if schema.name in self.schemas:
            raise RelationExistsError(f"relation {schema.name} already exists")
        if schema.bucket_capacity is None and self.meta.get("bucket_capacity"):
            schema = RelationSchema(schema.name, schema.attributes, schema.grid_attrs,
                                    self.meta["bucket_capacity"])
        gf = GridFile.create(self.directory, schema, self.policy, self.page_size, self.stats,
                             self.cache_pages)
        self.files[schema.name] = gf
        self.schemas[schema.name] = schema
        self.files["RELCAT"].insert((schema.name, len(schema.attributes),
                                     schema.bucket_capacity or 0))
        for pos, a in enumerate(schema.attributes):
            gridpos = schema.dim_of(pos)
            self.files["ATTRCAT"].insert(
                (schema.name, pos, a.name, _TYPE_CODES[a.type], a.width,
                 -1 if gridpos is None else gridpos)
            )
        return gf

    def drop(self, name: str) -> None:
        if name in SYSTEM:
            raise SchemaError(f"cannot drop catalog relation {name}")
        self.lookup(name)
        for cat in ("RELCAT", "ATTRCAT"):
            gf = self.files[cat]
            gf.delete_where(from_basic_term(gf.space, "RELNAME", "=", name))
        gf = self.files.pop(name)
        del self.schemas[name]
        gf.store.remove_files()
        gf.closed = True

    def flush(self) -> None:
        for gf in self.files.values():
            gf.flush()

    def close(self) -> None:
        for gf in self.files.values():
            gf.close()
        self.files.clear()
