"""The partition list: every linear scale of a relation in one append-only list.

An entry's position in the list is its timestamp.  Entry values are
prefix-coded in whole words; a coded value stands for the key obtained by
zero-padding it to the attribute's full key width.  The domain bounds of each
scale are implicit and never stored.
"""

from __future__ import annotations

import bisect
from typing import NamedTuple

from .errors import ScaleError
from .schema import WORD

DOMAIN_MIN = -1
DOMAIN_MAX = -2

_ADDR_BYTES = 8


class PartEntry(NamedTuple):
    dim: int
    value: bytes
    piece_addr: int


def _prefix_int(data: bytes, nbytes: int) -> int:
    return int.from_bytes(data[:nbytes].ljust(nbytes, b"\0"), "big")


class Partlist:
    """All scale refinements of one relation, in append order.

    ``key_widths`` gives each grid dimension's key width in bytes (a multiple
    of the word size); ``min_keys``/``max_keys`` give the smallest and largest
    legal key of each dimension as full-width byte strings.
    """

    def __init__(self, key_widths, min_keys=None, max_keys=None, page_file=None):
        self.key_widths = tuple(key_widths)
        self.k = len(self.key_widths)
        for w in self.key_widths:
            if w % WORD or w <= 0:
                raise ScaleError(f"key width {w} is not a positive multiple of {WORD}")
        self.min_keys = tuple(min_keys or (b"\0" * w for w in self.key_widths))
        self.max_keys = tuple(max_keys or (b"\xff" * w for w in self.key_widths))
        self.entries: list[PartEntry] = []
        self._points: list[int] = []
        # per dim: sorted points and the positions holding them
        self._sorted = [[] for _ in range(self.k)]
        self._sorted_pos = [[] for _ in range(self.k)]
        # per dim: positions in append order
        self._by_dim = [[] for _ in range(self.k)]
        self._file = page_file
        self._tail_page = 0
        self._tail_buf = bytearray()

    # ---- persistence -------------------------------------------------------

    def load(self) -> None:
        """Read the whole list from its page file (the only page traffic)."""
        f = self._file
        self._tail_page, self._tail_buf = 0, bytearray()
        for index in range(f.npages):
            page = f.read(index)
            off = 0
            while off < len(page) and page[off] != 0:
                dim = page[off] - 1
                nwords = page[off + 1]
                vlen = nwords * WORD
                value = bytes(page[off + 2 : off + 2 + vlen])
                addr = int.from_bytes(page[off + 2 + vlen : off + 2 + vlen + _ADDR_BYTES], "little")
                self._add(PartEntry(dim, value, addr))
                off += 2 + vlen + _ADDR_BYTES
            self._tail_page, self._tail_buf = index, bytearray(page[:off])

    def _persist(self, entry: PartEntry) -> None:
        f = self._file
        if f is None:
            return
        rec = bytes([entry.dim + 1, len(entry.value) // WORD]) + entry.value
        rec += entry.piece_addr.to_bytes(_ADDR_BYTES, "little")
        if len(rec) >= f.page_size:
            raise ScaleError("scale record does not fit in a page")
        if f.npages == 0:
            f.alloc()
            self._tail_page, self._tail_buf = 0, bytearray()
        if len(self._tail_buf) + len(rec) > f.page_size:
            self._tail_page = f.alloc().index
            self._tail_buf = bytearray()
        self._tail_buf += rec
        f.write(self._tail_page, bytes(self._tail_buf).ljust(f.page_size, b"\0"))

    # ---- basic accessors ---------------------------------------------------

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def point(self, pos: int) -> int:
        return self._points[pos]

    def point_of(self, dim: int, value: bytes) -> int:
        return _prefix_int(value, self.key_widths[dim])

    def domain_min_point(self, dim: int) -> int:
        return int.from_bytes(self.min_keys[dim], "big")

    def _add(self, entry: PartEntry) -> int:
        pos = len(self.entries)
        pt = self.point_of(entry.dim, entry.value)
        self.entries.append(entry)
        self._points.append(pt)
        i = bisect.bisect_left(self._sorted[entry.dim], pt)
        self._sorted[entry.dim].insert(i, pt)
        self._sorted_pos[entry.dim].insert(i, pos)
        self._by_dim[entry.dim].append(pos)
        return pos

    def sorted_points(self, dim: int) -> list:
        return self._sorted[dim]

    def extents(self) -> tuple:
        return tuple(len(p) + 1 for p in self._sorted)

    # ---- queries -----------------------------------------------------------

    def locate_brackets(self, dim: int, key: int) -> tuple:
        """Positions of the entries bracketing ``key`` on ``dim``.

        The lower bracket holds the greatest value <= key, the upper one the
        least value > key; missing brackets are the domain sentinels.
        """
        pts = self._sorted[dim]
        i = bisect.bisect_right(pts, key)
        lower = self._sorted_pos[dim][i - 1] if i > 0 else DOMAIN_MIN
        upper = self._sorted_pos[dim][i] if i < len(pts) else DOMAIN_MAX
        return lower, upper

    def bracket_values(self, dim: int, key: int) -> tuple:
        lo, hi = self.locate_brackets(dim, key)
        return (
            None if lo == DOMAIN_MIN else self.entries[lo].value,
            None if hi == DOMAIN_MAX else self.entries[hi].value,
        )

    def rank_at(self, dim: int, key: int, cutoff: int) -> int:
        """Interval index of ``key`` on ``dim`` counting only entries before ``cutoff``."""
        pts = self._sorted[dim]
        i = bisect.bisect_right(pts, key)
        poss = self._sorted_pos[dim]
        return sum(1 for j in range(i) if poss[j] < cutoff)

    def extent_at(self, dim: int, cutoff: int) -> int:
        """Number of intervals on ``dim`` as the list stood before ``cutoff``."""
        return 1 + bisect.bisect_left(self._by_dim[dim], cutoff)

    def points_before(self, dim: int, cutoff: int) -> list:
        poss = self._sorted_pos[dim]
        return [p for p, q in zip(self._sorted[dim], poss) if q < cutoff]

    def interval_index(self, dim: int, key: int) -> int:
        return bisect.bisect_right(self._sorted[dim], key)

    def interval_lower(self, dim: int, index: int) -> int:
        """Lower key bound of interval ``index`` of the current scale on ``dim``."""
        return self.domain_min_point(dim) if index == 0 else self._sorted[dim][index - 1]

    def interval_bounds(self, dim: int, index: int) -> tuple:
        """Half-open key range of interval ``index`` (upper bound exclusive)."""
        pts = self._sorted[dim]
        hi = pts[index] if index < len(pts) else int.from_bytes(self.max_keys[dim], "big") + 1
        return self.interval_lower(dim, index), hi

    def locate(self, keys) -> tuple:
        """Find the directory piece and in-piece coordinates of the block holding ``keys``.

        Returns ``(latest, lowers, ranks)``: the position of the latest lower
        bracket (``DOMAIN_MIN`` for the root piece), each dimension's lower
        bracket position, and each dimension's interval index as of ``latest``.
        """
        lowers = [self.locate_brackets(d, key)[0] for d, key in enumerate(keys)]
        latest = max(lowers)
        if latest == DOMAIN_MIN:
            return latest, lowers, [0] * self.k
        ranks = [
            0 if d == self.entries[latest].dim else self.rank_at(d, key, latest)
            for d, key in enumerate(keys)
        ]
        return latest, lowers, ranks

    # ---- refinement --------------------------------------------------------

    def append(self, dim: int, value: bytes, piece_addr: int) -> int:
        if not 0 <= dim < self.k:
            raise ScaleError(f"dimension {dim} out of range")
        if not value or len(value) % WORD or len(value) > self.key_widths[dim]:
            raise ScaleError(f"bad coded value length {len(value)}")
        pt = self.point_of(dim, value)
        pts = self._sorted[dim]
        i = bisect.bisect_left(pts, pt)
        if i < len(pts) and pts[i] == pt:
            raise ScaleError(f"value already present on dimension {dim}")
        if pt <= self.domain_min_point(dim):
            raise ScaleError("split value must exceed the domain minimum")
        entry = PartEntry(dim, bytes(value), piece_addr)
        self._persist(entry)
        return self._add(entry)

    def choose_split_value(self, dim, lower, upper, residents, midpoint_only=False):
        """Pick a coded split value for the interval [lower, upper) on ``dim``.

        ``lower``/``upper`` are the coded bracket values (``None`` for the
        domain bounds) and ``residents`` the full-width key bytes of the
        tuples to separate.  Returns the coded value, or ``None`` when no
        value of any legal length separates the residents.
        """
        if not residents:
            return None
        width = self.key_widths[dim]
        start = max(len(lower or b""), len(upper or b""), WORD)
        for nbytes in range(start, width + 1, WORD):
            low = _prefix_int(lower if lower is not None else self.min_keys[dim], nbytes)
            if upper is not None:
                high = _prefix_int(upper, nbytes)
            else:
                high = _prefix_int(self.max_keys[dim], nbytes) + 1
            prefixes = sorted(_prefix_int(r, nbytes) for r in residents)
            lo_r, hi_r = prefixes[0], prefixes[-1]
            mid = (low + high) // 2
            if lo_r < mid <= hi_r:
                chosen = mid
            elif midpoint_only or lo_r == hi_r:
                continue
            else:
                chosen = prefixes[len(prefixes) // 2]
                if chosen == lo_r:
                    chosen = next(p for p in prefixes if p > lo_r)
            coded = chosen.to_bytes(nbytes, "big")
            while len(coded) > WORD and coded[-WORD:] == b"\0" * WORD:
                coded = coded[:-WORD]
            return coded
        return None
