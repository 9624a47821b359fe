"""One relation stored as a grid file.

The relation's tuples live in fixed-capacity bucket pages.  Every grid block
maps through the directory to a bucket, and the blocks sharing a bucket
always form a box, recorded by the per-dimension SHARED flags of their
directory elements.  An overflowing bucket first splits its box of blocks in
two; a bucket owning a single block forces a refinement of one linear scale,
which appends a new directory piece.
"""

from __future__ import annotations

import enum
import itertools
import struct
from dataclasses import dataclass
from pathlib import Path

from .directory import ROOT, Directory, DirectoryElement
from .errors import CorruptFileError, RelationExistsError, RelationNotFoundError, SchemaError
from .region import GridSpace, RegionSet, box_contains, intersect
from .scales import DOMAIN_MIN, Partlist
from .storage import DEFAULT_PAGE_SIZE, SUFFIX, AccessStats, PageId, PageStore

_HEADER = struct.Struct("<4sHIIiHHBBBxQII")
_MAGIC = b"GDAT"
_VERSION = 1
_HEADER_PAGE = PageId("data", 0)
_BUCKET_HDR = 8  # count u16, pad u16, next overflow page u32


class SplitPolicy(enum.Enum):
    ROUND_ROBIN = "roundrobin"
    MIDPOINT_FIRST = "midpoint"


_POLICY_CODES = {SplitPolicy.ROUND_ROBIN: 0, SplitPolicy.MIDPOINT_FIRST: 1}


@dataclass(frozen=True)
class GridStats:
    buckets: int
    tuples: int
    capacity: int
    directory_elements: int
    partitions: tuple
    overflow_pages: int = 0

    @property
    def occupancy(self) -> float:
        if not self.buckets:
            return 0.0
        return self.tuples / (self.buckets * self.capacity)

    @property
    def redundancy(self) -> float:
        return self.directory_elements / self.buckets


def bucket_capacity(schema, page_size) -> int:
    fit = (page_size - _BUCKET_HDR) // schema.tuple_width
    cap = fit if schema.bucket_capacity is None else min(fit, schema.bucket_capacity)
    if cap < 2:
        raise SchemaError(
            f"page size {page_size} holds only {fit} tuples of {schema.name}; need at least 2"
        )
    return cap


def read_page_size(directory, name) -> int:
    path = Path(directory) / f"{name.lower()}{SUFFIX['data']}"
    if not path.exists():
        raise RelationNotFoundError(f"relation {name} has no data file in {directory}")
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size or raw[:4] != _MAGIC:
        raise CorruptFileError(f"{path} has no grid-file header")
    return _HEADER.unpack(raw)[2]


class GridFile:
    """A relation stored as a grid file; create with :meth:`create`, reopen with :meth:`open`."""

    def __init__(self, store, schema, policy, capacity):
        self.store = store
        self.schema = schema
        self.policy = policy
        self.capacity = capacity
        self.k = schema.k
        self.space = GridSpace.for_schema(schema)
        attrs = [schema.grid_attribute(d) for d in range(self.k)]
        self.partlist = Partlist(
            schema.key_widths,
            [a.min_key_bytes for a in attrs],
            [a.max_key_bytes for a in attrs],
            store.files["scales"],
        )
        self.directory = Directory(store.files["directory"], self.partlist, self.k)
        self.ntuples = 0
        self.nbuckets = 1
        self.noverflow = 0
        self.rr_next = 0
        self.closed = False

    # ---- lifecycle ---------------------------------------------------------

    @classmethod
    def create(cls, directory, schema, policy=SplitPolicy.MIDPOINT_FIRST,
               page_size=DEFAULT_PAGE_SIZE, stats=None, cache_pages=0):
        policy = SplitPolicy(policy)
        capacity = bucket_capacity(schema, page_size)
        if (Path(directory) / f"{schema.name.lower()}{SUFFIX['data']}").exists():
            raise RelationExistsError(f"relation {schema.name} already exists")
        Path(directory).mkdir(parents=True, exist_ok=True)
        store = PageStore(directory, schema.name, page_size, stats, create=True,
                          cache_pages=cache_pages)
        gf = cls(store, schema, policy, capacity)
        store.alloc_page("data")  # header page
        root = store.alloc_page("data")
        gf._write_bucket(root.index, [], [])
        gf.directory.init_root(root.index)
        gf._write_header()
        return gf

    @classmethod
    def open(cls, directory, schema, stats=None, cache_pages=0):
        page_size = read_page_size(directory, schema.name)
        store = PageStore(directory, schema.name, page_size, stats, cache_pages=cache_pages)
        try:
            raw = store.read_page(_HEADER_PAGE)
            (magic, version, psize, shash, free_head, width, cap, k, pol, rr,
             ntuples, nbuckets, noverflow) = _HEADER.unpack(raw[: _HEADER.size])
            if magic != _MAGIC or version != _VERSION or psize != page_size:
                raise CorruptFileError(f"bad header in {schema.name}")
            if shash != schema.schema_hash() or width != schema.tuple_width or k != schema.k:
                raise CorruptFileError(f"schema of {schema.name} does not match its files")
            policy = next(p for p, c in _POLICY_CODES.items() if c == pol)
            gf = cls(store, schema, policy, cap)
            store.files["data"].free_head = free_head
            gf.rr_next, gf.ntuples, gf.nbuckets, gf.noverflow = rr, ntuples, nbuckets, noverflow
            gf.partlist.load()
            gf.directory.open()
        except Exception:
            store.close()
            raise
        return gf

    def _write_header(self) -> None:
        body = _HEADER.pack(
            _MAGIC, _VERSION, self.store.page_size, self.schema.schema_hash(),
            self.store.files["data"].free_head, self.schema.tuple_width, self.capacity,
            self.k, _POLICY_CODES[self.policy], self.rr_next,
            self.ntuples, self.nbuckets, self.noverflow,
        )
        self.store.write_page(_HEADER_PAGE, body.ljust(self.store.page_size, b"\0"))

    def flush(self) -> None:
        self._write_header()
        self.store.flush()

    def close(self) -> None:
        if not self.closed:
            self.flush()
            self.store.close()
            self.closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @property
    def stats_counters(self) -> AccessStats:
        return self.store.stats

    # ---- buckets -----------------------------------------------------------

    def _read_bucket(self, page: int) -> tuple:
        """(records, overflow chain pages) of the bucket headed by ``page``."""
        width = self.schema.tuple_width
        recs, chain = [], []
        cur = page
        while True:
            raw = self.store.files["data"].read(cur)
            count = int.from_bytes(raw[0:2], "little")
            nxt = int.from_bytes(raw[4:8], "little")
            base = _BUCKET_HDR
            recs.extend(raw[base + i * width : base + (i + 1) * width] for i in range(count))
            if not nxt:
                return recs, chain
            chain.append(nxt)
            cur = nxt

    def _write_bucket(self, page: int, recs, chain) -> None:
        f = self.store.files["data"]
        c = self.capacity
        need = max(1, -(-len(recs) // c))
        pages = [page] + list(chain)
        while len(pages) < need:
            pages.append(f.alloc().index)
            self.noverflow += 1
        for extra in pages[need:]:
            f.free(extra)
            self.noverflow -= 1
        pages = pages[:need]
        for i, p in enumerate(pages):
            part = recs[i * c : (i + 1) * c]
            nxt = pages[i + 1] if i + 1 < len(pages) else 0
            body = (len(part).to_bytes(2, "little") + b"\0\0" + nxt.to_bytes(4, "little")
                    + b"".join(part))
            f.write(p, body.ljust(self.store.page_size, b"\0"))

    # ---- geometry helpers --------------------------------------------------

    def _keys(self, rec: bytes) -> tuple:
        return self.schema.grid_keys(rec)

    def _coords(self, keys) -> tuple:
        return tuple(self.partlist.interval_index(d, key) for d, key in enumerate(keys))

    def _element_at(self, coords) -> tuple:
        pos, index = self.directory.block_address(coords)
        return pos, index, self.directory.read_element(pos, index)

    def _region_of(self, page: int, coords) -> tuple:
        """Box of block coordinates (lo inclusive, hi exclusive) sharing bucket ``page``."""
        ext = self.partlist.extents()
        lo, hi = list(coords), [c + 1 for c in coords]
        for d in range(self.k):
            c = list(coords)
            while lo[d] > 0:
                c[d] = lo[d]
                if not self._element_at(c)[2].shared[d]:
                    break
                lo[d] -= 1
            while hi[d] < ext[d]:
                c[d] = hi[d]
                e = self._element_at(c)[2]
                if not e.shared[d] or e.bucket != page:
                    break
                hi[d] += 1
        return tuple(lo), tuple(hi)

    @staticmethod
    def _blocks(lo, hi):
        return itertools.product(*(range(a, b) for a, b in zip(lo, hi)))

    # ---- insertion ---------------------------------------------------------

    def insert(self, values) -> None:
        rec = self.schema.encode(values)
        keys = self._keys(rec)
        with self.store.operation():
            loc = self.directory.locate_element(keys)
            page = loc.element.bucket
            recs, chain = self._read_bucket(page)
            recs.append(rec)
            self.ntuples += 1
            self._settle(page, recs, chain)

    def _settle(self, page, recs, chain) -> None:
        work = [(page, recs, chain)]
        while work:
            page, recs, chain = work.pop()
            if len(recs) <= self.capacity:
                self._write_bucket(page, recs, chain)
                continue
            coords = self._coords(self._keys(recs[0]))
            lo, hi = self._region_of(page, coords)
            spans = [b - a for a, b in zip(lo, hi)]
            if max(spans) > 1:
                d = spans.index(max(spans))
                new = self._split_region(page, lo, hi, d)
                cut = self.partlist.interval_lower(d, lo[d] + spans[d] // 2)
            else:
                choice = self._choose_refinement(coords, recs)
                if choice is None:
                    self._write_bucket(page, recs, chain)  # inseparable: overflow chain
                    continue
                d, value = choice
                new = self._refine(coords, d, value)
                cut = self.partlist.point_of(d, value)
            low = [r for r in recs if self._keys(r)[d] < cut]
            high = [r for r in recs if self._keys(r)[d] >= cut]
            work.append((page, low, chain))
            work.append((new, high, []))

    def _new_bucket(self) -> int:
        self.nbuckets += 1
        return self.store.alloc_page("data").index

    def _split_region(self, page, lo, hi, d) -> int:
        """Give the upper half of a shared box along ``d`` its own bucket."""
        mid = lo[d] + (hi[d] - lo[d]) // 2
        new = self._new_bucket()
        upper_lo = list(lo)
        upper_lo[d] = mid
        changes = []
        for block in self._blocks(upper_lo, hi):
            pos, index, e = self._element_at(block)
            shared = list(e.shared)
            if block[d] == mid:
                shared[d] = False
            changes.append((pos, index, DirectoryElement(new, tuple(shared))))
        self.directory.update_elements(changes)
        return new

    def _choose_refinement(self, coords, recs):
        def attempt(d, midpoint_only):
            lower_key = self.partlist.interval_lower(d, coords[d])
            lower, upper = self.partlist.bracket_values(d, lower_key)
            residents = [self.schema.grid_key_bytes(r, d) for r in recs]
            return self.partlist.choose_split_value(d, lower, upper, residents, midpoint_only)

        if self.policy is SplitPolicy.ROUND_ROBIN:
            for step in range(self.k):
                d = (self.rr_next + step) % self.k
                value = attempt(d, False)
                if value is not None:
                    self.rr_next = (d + 1) % self.k
                    return d, value
            return None
        for midpoint_only in (True, False):
            for d in range(self.k):
                value = attempt(d, midpoint_only)
                if value is not None:
                    return d, value
        return None

    def _refine(self, coords, d, value) -> int:
        """Append a scale entry on ``d`` and the directory piece for the new slab."""
        pos = len(self.partlist)
        new = self._new_bucket()
        piece = self.directory._shape(d, pos, 0)
        own = tuple(coords[i] for i in piece.dims)
        elements = []
        for cross in itertools.product(*(range(e) for e in piece.extents)):
            if cross == own:
                elements.append(DirectoryElement(new, (False,) * self.k))
                continue
            block = list(coords)
            for i, c in zip(piece.dims, cross):
                block[i] = c
            lower = self._element_at(block)[2]
            elements.append(lower.with_shared(d, True))
        addr = self.directory.append_piece(d, pos, elements)
        self.partlist.append(d, value, addr)
        return new

    # ---- retrieval ---------------------------------------------------------

    def point_query(self, grid_values) -> list:
        """Tuples whose grid attributes equal ``grid_values`` (in grid order)."""
        keys = self.schema.grid_keys_of_values(grid_values)
        loc = self.directory.locate_element(keys)
        recs, _ = self._read_bucket(loc.element.bucket)
        return [self.schema.decode(r) for r in recs if self._keys(r) == keys]

    def whole(self) -> RegionSet:
        return self.space.whole()

    def scan_buckets(self, region=None, residual=None):
        """Yield, per fetched bucket, the list of its tuples inside the region.

        Each bucket is fetched at most once per scan, however many blocks or
        boxes of the region it covers; its tuples are matched against the whole
        region, and the boxes are disjoint, so no tuple is produced twice.
        """
        region = self.whole() if region is None else region
        seen = set()
        for box in region.boxes:
            for hit in self.directory.enumerate_region(box):
                page = hit.element.bucket
                if not hit.fetch or page in seen:
                    continue
                seen.add(page)
                recs, _ = self._read_bucket(page)
                out = []
                for r in recs:
                    if not region.contains(self._keys(r)):
                        continue
                    t = self.schema.decode(r)
                    if residual is None or residual(t):
                        out.append(t)
                yield out

    def scan_region(self, region=None, residual=None):
        for batch in self.scan_buckets(region, residual):
            yield from batch

    def full_scan(self) -> list:
        return list(self.scan_region())

    def slab(self, dim: int, index: int) -> RegionSet:
        lo, hi = self.partlist.interval_bounds(dim, index)
        box = list(self.space.domains)
        box[dim] = (lo, hi)
        return RegionSet([tuple(box)], self.k)

    def ordered_scan(self, dim: int, region=None, residual=None):
        """Tuples sorted on grid dimension ``dim``, produced one scale interval at a time."""
        region = self.whole() if region is None else region
        attr = self.schema.grid_attrs[dim]
        for index in range(self.partlist.extents()[dim]):
            part = intersect(region, self.slab(dim, index))
            if part.is_empty():
                continue
            rows = list(self.scan_region(part, residual))
            rows.sort(key=lambda t: t[attr])
            yield from rows

    # ---- deletion ----------------------------------------------------------

    def take_where(self, region=None, residual=None) -> list:
        """Remove and return the tuples in ``region`` passing ``residual``."""
        region = self.whole() if region is None else region
        removed, emptied = [], {}
        with self.store.operation():
            for box in region.boxes:
                for hit in list(self.directory.enumerate_region(box)):
                    if not hit.fetch:
                        continue
                    page = hit.element.bucket
                    recs, chain = self._read_bucket(page)
                    keep = []
                    for r in recs:
                        t = None
                        if box_contains(box, self._keys(r)):
                            t = self.schema.decode(r)
                            if residual is not None and not residual(t):
                                t = None
                        if t is None:
                            keep.append(r)
                        else:
                            removed.append(t)
                    if len(keep) == len(recs):
                        continue
                    self._write_bucket(page, keep, chain)
                    self.ntuples -= len(recs) - len(keep)
                    if not keep:
                        emptied[page] = self._hit_coords(hit.lowers)
            if emptied:
                self._merge_empty(emptied)
        return removed

    def delete_where(self, region=None, residual=None) -> int:
        return len(self.take_where(region, residual))

    def _hit_coords(self, lowers) -> tuple:
        return tuple(
            0 if p == DOMAIN_MIN else self.partlist.interval_index(d, self.partlist.point(p))
            for d, p in enumerate(lowers)
        )

    def _merge_empty(self, emptied) -> None:
        queue = list(emptied.items())
        while queue:
            page, coords = queue.pop()
            if self._element_at(coords)[2].bucket != page:
                continue
            recs, _ = self._read_bucket(page)
            if recs:
                continue
            target = self._merge_into_neighbor(page, coords)
            if target is not None:
                self.store.free_page(PageId("data", page))
                self.nbuckets -= 1
                queue.append((target, coords))
        if self.ntuples == 0 and self.nbuckets > 1:
            self._collapse()

    def _merge_into_neighbor(self, page, coords):
        lo, hi = self._region_of(page, coords)
        ext = self.partlist.extents()
        for d in range(self.k):
            if lo[d] > 0:
                probe = list(lo)
                probe[d] = lo[d] - 1
                other = self._element_at(probe)[2].bucket
                nlo, nhi = self._region_of(other, probe)
                if nhi[d] == lo[d] and _same_except(nlo, nhi, lo, hi, d):
                    changes = []
                    for block in self._blocks(lo, hi):
                        pos, index, e = self._element_at(block)
                        shared = e.shared
                        if block[d] == lo[d]:
                            shared = e.with_shared(d, True).shared
                        changes.append((pos, index, DirectoryElement(other, shared)))
                    self.directory.update_elements(changes)
                    return other
            if hi[d] < ext[d]:
                probe = list(lo)
                probe[d] = hi[d]
                other = self._element_at(probe)[2].bucket
                nlo, nhi = self._region_of(other, probe)
                if nlo[d] == hi[d] and _same_except(nlo, nhi, lo, hi, d):
                    changes = []
                    for block in self._blocks(lo, hi):
                        pos, index, e = self._element_at(block)
                        changes.append((pos, index, DirectoryElement(other, e.shared)))
                    for block in self._blocks(nlo, nhi):
                        if block[d] == nlo[d]:
                            pos, index, e = self._element_at(block)
                            changes.append((pos, index, e.with_shared(d, True)))
                    self.directory.update_elements(changes)
                    return other
        return None

    def _collapse(self) -> None:
        """Point every block at one bucket once the relation is empty."""
        target = self.directory.read_element(ROOT, 0).bucket
        pages, changes = set(), []
        for block in self._blocks((0,) * self.k, self.partlist.extents()):
            pos, index, e = self._element_at(block)
            pages.add(e.bucket)
            shared = tuple(c > 0 for c in block)
            changes.append((pos, index, DirectoryElement(target, shared)))
        self.directory.update_elements(changes)
        for p in sorted(pages - {target}):
            self.store.free_page(PageId("data", p))
        self.nbuckets = 1

    # ---- statistics and audits ---------------------------------------------

    def stats(self) -> GridStats:
        return GridStats(
            buckets=self.nbuckets,
            tuples=self.ntuples,
            capacity=self.capacity,
            directory_elements=self.directory.element_count(),
            partitions=self.partlist.extents(),
            overflow_pages=self.noverflow,
        )

    def check_invariants(self) -> None:
        """Walk every block and bucket; raise AssertionError on any violation."""
        ext = self.partlist.extents()
        owner = {}
        for block in self._blocks((0,) * self.k, ext):
            owner[block] = self._element_at(block)[2]
        boxes = {}
        for block, e in owner.items():
            for d in range(self.k):
                if e.shared[d]:
                    if block[d] == 0:
                        raise AssertionError(f"block {block} shares below the domain on {d}")
                    below = list(block)
                    below[d] -= 1
                    if owner[tuple(below)].bucket != e.bucket:
                        raise AssertionError(f"block {block} shared flag {d} points elsewhere")
            boxes.setdefault(e.bucket, []).append(block)
        if len(boxes) != self.nbuckets:
            raise AssertionError(f"{len(boxes)} buckets referenced, header says {self.nbuckets}")
        total = 0
        for page, blocks in boxes.items():
            lo = tuple(min(b[d] for b in blocks) for d in range(self.k))
            hi = tuple(max(b[d] for b in blocks) + 1 for d in range(self.k))
            n = 1
            for a, b in zip(lo, hi):
                n *= b - a
            if n != len(blocks):
                raise AssertionError(f"bucket {page} blocks do not form a box")
            for b in blocks:
                for d in range(self.k):
                    if owner[b].shared[d] != (b[d] > lo[d]):
                        raise AssertionError(f"bucket {page} shared flags inconsistent at {b}")
            recs, _ = self._read_bucket(page)
            total += len(recs)
            for r in recs:
                c = self._coords(self._keys(r))
                if not all(a <= x < b for a, x, b in zip(lo, c, hi)):
                    raise AssertionError(f"tuple outside its bucket region in {page}")
        if total != self.ntuples:
            raise AssertionError(f"{total} tuples stored, header says {self.ntuples}")


def _same_except(alo, ahi, blo, bhi, d) -> bool:
    return all(alo[i] == blo[i] and ahi[i] == bhi[i] for i in range(len(alo)) if i != d)

