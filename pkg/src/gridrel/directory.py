"""The grid directory, stored as append-only (k-1)-dimensional pieces.

Refining the scale on dimension ``d`` appends one piece holding the directory
elements of the new slab; pieces already on disk are never moved or resized.
A block's element lives in the piece of its latest lower bracket, at the
row-major position given by the other dimensions' interval indices as the
partition list stood when that piece was written.

Pieces are packed back to back into directory pages.  A piece that fits in a
page never straddles a page boundary; larger pieces start on a fresh page and
occupy consecutive pages with a whole number of elements per page.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple

from .errors import CorruptFileError, DirectoryError
from .scales import DOMAIN_MIN, Partlist

MAGIC = b"GDIR"
ROOT = DOMAIN_MIN


class DirectoryElement(NamedTuple):
    bucket: int
    shared: tuple

    def with_shared(self, dim: int, flag: bool) -> "DirectoryElement":
        flags = list(self.shared)
        flags[dim] = flag
        return DirectoryElement(self.bucket, tuple(flags))


class Piece(NamedTuple):
    addr: int
    split_dim: int  # -1 for the root
    dims: tuple  # dimensions indexed within the piece, ascending
    extents: tuple  # interval counts of ``dims`` when the piece was written
    strides: tuple
    count: int


class Hit(NamedTuple):
    """One directory element produced by :meth:`Directory.enumerate_region`."""

    pos: int
    index: int
    element: DirectoryElement
    lowers: tuple  # lower-bracket position of the block on each dimension
    fetch: bool  # this element is the one responsible for reading the bucket


class Located(NamedTuple):
    pos: int
    index: int
    element: DirectoryElement
    lowers: tuple
    bounds: tuple  # lower key bound of the block on each dimension


class Directory:
    def __init__(self, page_file, partlist: Partlist, k: int):
        self.file = page_file
        self.partlist = partlist
        self.k = k
        self.page_size = page_file.page_size
        self.elem_size = 4 + math.ceil(k / 8)
        self.per_page = self.page_size // self.elem_size
        if self.per_page < 1:
            raise DirectoryError("page too small for one directory element")
        self.pieces: dict[int, Piece] = {}
        self._tail = None  # (page, offset) of the next free byte

    # ---- encoding ----------------------------------------------------------

    def encode_element(self, e: DirectoryElement) -> bytes:
        mask = sum(1 << d for d, flag in enumerate(e.shared) if flag)
        return e.bucket.to_bytes(4, "little") + mask.to_bytes(self.elem_size - 4, "little")

    def decode_element(self, raw: bytes) -> DirectoryElement:
        bucket = int.from_bytes(raw[:4], "little")
        mask = int.from_bytes(raw[4 : self.elem_size], "little")
        return DirectoryElement(bucket, tuple(bool(mask >> d & 1) for d in range(self.k)))

    # ---- geometry ----------------------------------------------------------

    @staticmethod
    def _root(addr: int) -> Piece:
        return Piece(addr, -1, (), (), (), 1)

    def _shape(self, split_dim: int, created_at: int, addr: int) -> Piece:
        dims = tuple(i for i in range(self.k) if i != split_dim)
        extents = tuple(self.partlist.extent_at(i, created_at) for i in dims)
        strides, acc = [], 1
        for ext in reversed(extents):
            strides.append(acc)
            acc *= ext
        return Piece(addr, split_dim, dims, extents, tuple(reversed(strides)), acc)

    def _place(self, count: int) -> int:
        """Reserve room for ``count`` elements at the tail; returns the byte address."""
        nbytes = count * self.elem_size
        page, off = self._tail if self._tail else (None, 0)
        if page is not None and nbytes <= self.page_size - off:
            self._tail = (page, off + nbytes)
            return page * self.page_size + off
        start = self.file.npages
        npages = 1 if count <= self.per_page else math.ceil(count / self.per_page)
        last_count = count - (npages - 1) * self.per_page
        self._tail = (start + npages - 1, last_count * self.elem_size)
        return start * self.page_size

    def element_location(self, piece: Piece, index: int) -> tuple:
        page, off = divmod(piece.addr, self.page_size)
        if off + piece.count * self.elem_size <= self.page_size:
            return page, off + index * self.elem_size
        q, r = divmod(index, self.per_page)
        return page + q, r * self.elem_size

    def index_of(self, piece: Piece, coords) -> int:
        """Row-major index of the element at per-dimension interval indices ``coords``."""
        return sum(coords[d] * s for d, s in zip(piece.dims, piece.strides))

    def piece_byte_ranges(self, pos: int) -> list:
        """(page, start, end) byte spans occupied by a piece, for audits."""
        piece = self.pieces[pos]
        spans = {}
        for i in range(piece.count):
            page, off = self.element_location(piece, i)
            lo, hi = spans.get(page, (off, off))
            spans[page] = (min(lo, off), max(hi, off + self.elem_size))
        return [(p, lo, hi) for p, (lo, hi) in sorted(spans.items())]

    # ---- lifecycle ---------------------------------------------------------

    def init_root(self, bucket: int) -> None:
        if self.file.npages:
            raise DirectoryError("directory already initialized")
        header = self.file.alloc()
        addr = self._place(1)
        self.pieces[ROOT] = self._root(addr)
        body = MAGIC + bytes([self.k]) + addr.to_bytes(8, "little")
        self.file.write(header.index, body.ljust(self.page_size, b"\0"))
        self._write_piece(self.pieces[ROOT], [DirectoryElement(bucket, (False,) * self.k)])

    def open(self) -> None:
        """Rebuild the piece table from the header and the partition list."""
        if self.file.npages == 0:
            raise CorruptFileError("empty directory file")
        header = self.file.read(0)
        if header[:4] != MAGIC or header[4] != self.k:
            raise CorruptFileError("bad directory header")
        root_addr = int.from_bytes(header[5:13], "little")
        self.pieces.clear()
        self._tail = (0, self.page_size)
        addr = self._place_replay(1)
        if addr != root_addr:
            raise CorruptFileError("root piece address mismatch")
        self.pieces[ROOT] = self._root(addr)
        for pos, entry in enumerate(self.partlist.entries):
            shape = self._shape(entry.dim, pos, 0)
            addr = self._place_replay(shape.count)
            if addr != entry.piece_addr:
                raise CorruptFileError(f"piece {pos} stored at {entry.piece_addr}, expected {addr}")
            self.pieces[pos] = shape._replace(addr=addr)

    def _place_replay(self, count: int) -> int:
        # like _place, but pages already exist on disk
        nbytes = count * self.elem_size
        page, off = self._tail
        if nbytes <= self.page_size - off:
            self._tail = (page, off + nbytes)
            return page * self.page_size + off
        start = page + 1
        npages = 1 if count <= self.per_page else math.ceil(count / self.per_page)
        last_count = count - (npages - 1) * self.per_page
        self._tail = (start + npages - 1, last_count * self.elem_size)
        return start * self.page_size

    # ---- piece I/O ---------------------------------------------------------

    def _write_piece(self, piece: Piece, elements) -> None:
        by_page: dict[int, list] = {}
        for i, e in enumerate(elements):
            page, off = self.element_location(piece, i)
            by_page.setdefault(page, []).append((off, self.encode_element(e)))
        for page in sorted(by_page):
            if page < self.file.npages:
                buf = bytearray(self.file.read(page))
            else:
                while self.file.npages <= page:
                    self.file.alloc()
                buf = bytearray(self.page_size)
            for off, raw in by_page[page]:
                buf[off : off + self.elem_size] = raw
            self.file.write(page, bytes(buf))

    def append_piece(self, split_dim: int, created_at: int, elements) -> int:
        """Write the piece created by refining ``split_dim`` at list position ``created_at``.

        Returns the piece's byte address; the caller stores it in the new
        partition-list entry.
        """
        if created_at != len(self.partlist):
            raise DirectoryError("pieces must be appended at the tail of the partition list")
        elements = list(elements)
        shape = self._shape(split_dim, created_at, 0)
        if len(elements) != shape.count:
            raise DirectoryError(f"piece needs {shape.count} elements, got {len(elements)}")
        addr = self._place(shape.count)
        piece = shape._replace(addr=addr)
        self._write_piece(piece, elements)
        self.pieces[created_at] = piece
        return addr

    def read_element(self, pos: int, index: int, cache=None) -> DirectoryElement:
        """Decode one element; ``cache`` (page -> bytes) lets a scan read each page once."""
        piece = self.pieces[pos]
        if not 0 <= index < piece.count:
            raise DirectoryError(f"element {index} outside piece {pos}")
        page, off = self.element_location(piece, index)
        if cache is None:
            raw = self.file.read(page)
        else:
            raw = cache.get(page)
            if raw is None:
                raw = cache[page] = self.file.read(page)
        return self.decode_element(raw[off : off + self.elem_size])

    def update_element(self, pos: int, index: int, element: DirectoryElement) -> None:
        self.update_elements([(pos, index, element)])

    def update_elements(self, changes) -> None:
        """In-place element rewrites, one read and one write per touched page."""
        by_page: dict[int, list] = {}
        for pos, index, element in changes:
            piece = self.pieces[pos]
            if not 0 <= index < piece.count:
                raise DirectoryError(f"element {index} outside piece {pos}")
            page, off = self.element_location(piece, index)
            by_page.setdefault(page, []).append((off, self.encode_element(element)))
        for page in sorted(by_page):
            buf = bytearray(self.file.read(page))
            for off, raw in by_page[page]:
                buf[off : off + self.elem_size] = raw
            self.file.write(page, bytes(buf))

    # ---- lookups -----------------------------------------------------------

    def address(self, keys) -> tuple:
        """(piece position, element index, lower bracket positions) for a point; no I/O."""
        latest, lowers, ranks = self.partlist.locate(keys)
        piece = self.pieces[latest]
        return latest, self.index_of(piece, ranks), tuple(lowers)

    def locate_element(self, keys) -> Located:
        pos, index, lowers = self.address(keys)
        element = self.read_element(pos, index)
        bounds = tuple(
            self.partlist.domain_min_point(d) if p == DOMAIN_MIN else self.partlist.point(p)
            for d, p in enumerate(lowers)
        )
        return Located(pos, index, element, lowers, bounds)

    def block_address(self, coords) -> tuple:
        """(piece position, element index) of the block at current interval indices."""
        keys = [self.partlist.interval_lower(d, c) for d, c in enumerate(coords)]
        pos, index, _ = self.address(keys)
        return pos, index

    def enumerate_region(self, box):
        """Yield every element whose block meets ``box`` (half-open key intervals)."""
        pl = self.partlist
        cache = {}
        first = [pl.locate_brackets(d, lo)[0] for d, (lo, hi) in enumerate(box)]
        last = [pl.locate_brackets(d, hi - 1)[0] for d, (lo, hi) in enumerate(box)]

        def point(p):
            return None if p == DOMAIN_MIN else pl.point(p)

        first_pt = [point(p) for p in first]
        last_pt = [point(p) for p in last]

        def fetch(element, lowers):
            return all(not element.shared[j] or lowers[j] == first[j] for j in range(self.k))

        if all(p == DOMAIN_MIN for p in first):
            lowers = (DOMAIN_MIN,) * self.k
            e = self.read_element(ROOT, 0, cache)
            yield Hit(ROOT, 0, e, lowers, fetch(e, lowers))

        for pos, entry in enumerate(pl.entries):
            d = entry.dim
            v = pl.point(pos)
            if last_pt[d] is None or v > last_pt[d]:
                continue
            if first_pt[d] is not None and v < first_pt[d]:
                continue
            piece = self.pieces[pos]
            choices = []
            for i in piece.dims:
                before = [(pt, q) for pt, q in zip(pl._sorted[i], pl._sorted_pos[i]) if q < pos]
                cand = [(0, DOMAIN_MIN, None)] + [(r + 1, q, pt) for r, (pt, q) in enumerate(before)]
                lo_pt, hi_pt = first_pt[i], last_pt[i]
                keep = [
                    (r, q) for r, q, pt in cand
                    if (q == DOMAIN_MIN and lo_pt is None)
                    or (pt is not None and (lo_pt is None or pt >= lo_pt)
                        and hi_pt is not None and pt <= hi_pt)
                ]
                if not keep:
                    break
                choices.append(keep)
            else:
                for combo in itertools.product(*choices):
                    index = sum(r * s for (r, _), s in zip(combo, piece.strides))
                    lowers = [None] * self.k
                    lowers[d] = pos
                    for i, (_, q) in zip(piece.dims, combo):
                        lowers[i] = q
                    lowers = tuple(lowers)
                    e = self.read_element(pos, index, cache)
                    yield Hit(pos, index, e, lowers, fetch(e, lowers))

    def iter_elements(self):
        """Every (piece position, index, element), piece by piece."""
        for pos in [ROOT] + list(range(len(self.partlist))):
            piece = self.pieces[pos]
            for index in range(piece.count):
                yield pos, index, self.read_element(pos, index)

    def element_count(self) -> int:
        return sum(p.count for p in self.pieces.values())
