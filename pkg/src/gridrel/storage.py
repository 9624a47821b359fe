"""Page-granular file storage with instrumented access counters.

Each relation owns three files (``.dat``, ``.dir``, ``.scales``).  Every page
read or write that reaches the operating system bumps exactly one counter in
a shared :class:`AccessStats`; the optional LRU cache and the per-operation
memo absorb repeated reads so that only physical traffic is counted.
"""

from __future__ import annotations

import contextlib
import os
from collections import OrderedDict
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple

from .errors import StorageError, UnknownPageError, WrongLengthError

DEFAULT_PAGE_SIZE = 4096
ROLES = ("data", "directory", "scales")
SUFFIX = {"data": ".dat", "directory": ".dir", "scales": ".scales"}
_PREFIX = {"data": "data", "directory": "dir", "scales": "scale"}


class PageId(NamedTuple):
    role: str
    index: int


@dataclass
class AccessStats:
    data_reads: int = 0
    data_writes: int = 0
    dir_reads: int = 0
    dir_writes: int = 0
    scale_reads: int = 0
    scale_writes: int = 0

    def bump(self, role: str, kind: str) -> None:
        name = f"{_PREFIX[role]}_{kind}"
        setattr(self, name, getattr(self, name) + 1)

    def reset(self) -> None:
        for f in fields(self):
            setattr(self, f.name, 0)

    def snapshot(self) -> "AccessStats":
        return AccessStats(**{f.name: getattr(self, f.name) for f in fields(self)})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def reads(self) -> int:
        return self.data_reads + self.dir_reads + self.scale_reads

    @property
    def writes(self) -> int:
        return self.data_writes + self.dir_writes + self.scale_writes

    def __sub__(self, other: "AccessStats") -> "AccessStats":
        return AccessStats(
            **{f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)}
        )


class PageFile:
    """A file of fixed-size pages for one role.

    Freed pages form a linked list threaded through their first four bytes;
    the owner persists ``free_head`` (``-1`` for an empty list) in its header.
    """

    def __init__(self, path, role, page_size, stats, *, create=False, cache_pages=0):
        if role not in ROLES:
            raise StorageError(f"unknown page role {role!r}")
        self.path = Path(path)
        self.role = role
        self.page_size = page_size
        self.stats = stats
        self.free_head = -1
        self.write_observers = []
        self._cache = OrderedDict() if cache_pages else None
        self._cache_pages = cache_pages
        self._memo = None
        if create:
            if self.path.exists():
                raise StorageError(f"{self.path} already exists")
            self._fh = open(self.path, "w+b")
            self.npages = 0
        else:
            if not self.path.exists():
                raise StorageError(f"{self.path} does not exist")
            self._fh = open(self.path, "r+b")
            size = os.fstat(self._fh.fileno()).st_size
            self.npages = -(-size // page_size)

    def _check(self, index: int) -> None:
        if not 0 <= index < self.npages:
            raise UnknownPageError(f"{self.role} page {index} was never allocated")

    def alloc(self) -> PageId:
        if self.free_head >= 0:
            index = self.free_head
            raw = self.read(index)
            self.free_head = int.from_bytes(raw[:4], "little") - 1
            self.write(index, bytes(self.page_size))
            return PageId(self.role, index)
        index = self.npages
        self.npages += 1
        return PageId(self.role, index)

    def free(self, index: int) -> None:
        self._check(index)
        link = (self.free_head + 1).to_bytes(4, "little")
        self.write(index, link + bytes(self.page_size - 4))
        self.free_head = index

    def read(self, index: int) -> bytes:
        self._check(index)
        if self._memo is not None and index in self._memo:
            return self._memo[index]
        if self._cache is not None and index in self._cache:
            self._cache.move_to_end(index)
            return self._cache[index]
        self._fh.seek(index * self.page_size)
        data = self._fh.read(self.page_size)
        if len(data) < self.page_size:
            data = data.ljust(self.page_size, b"\0")
        self.stats.bump(self.role, "reads")
        self._remember(index, data)
        return data

    def write(self, index: int, data: bytes) -> None:
        self._check(index)
        if len(data) != self.page_size:
            raise WrongLengthError(
                f"page write of {len(data)} bytes, page size is {self.page_size}"
            )
        data = bytes(data)
        for observer in self.write_observers:
            observer(index, data)
        self._fh.seek(index * self.page_size)
        self._fh.write(data)
        self.stats.bump(self.role, "writes")
        self._remember(index, data)

    def peek(self, index: int) -> bytes:
        """Uncounted raw read, for invariant checkers only."""
        self._fh.flush()
        self._fh.seek(index * self.page_size)
        return self._fh.read(self.page_size).ljust(self.page_size, b"\0")

    def _remember(self, index: int, data: bytes) -> None:
        if self._memo is not None:
            self._memo[index] = data
        if self._cache is not None:
            self._cache[index] = data
            self._cache.move_to_end(index)
            while len(self._cache) > self._cache_pages:
                self._cache.popitem(last=False)

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


class PageStore:
    """The page files of one relation, sharing a counter block."""

    def __init__(self, directory, name, page_size=DEFAULT_PAGE_SIZE, stats=None, *,
                 create=False, cache_pages=0):
        self.directory = Path(directory)
        self.name = name
        self.page_size = page_size
        self.stats = stats if stats is not None else AccessStats()
        self.files = {}
        try:
            for role in ROLES:
                self.files[role] = PageFile(
                    self.path(role), role, page_size, self.stats,
                    create=create, cache_pages=cache_pages,
                )
        except Exception:
            self.close()
            raise

    def path(self, role: str) -> Path:
        return self.directory / f"{self.name.lower()}{SUFFIX[role]}"

    def alloc_page(self, role: str) -> PageId:
        return self.files[role].alloc()

    def free_page(self, pid: PageId) -> None:
        if pid.role != "data":
            raise StorageError(f"{pid.role} pages are never freed")
        self.files["data"].free(pid.index)

    def read_page(self, pid: PageId) -> bytes:
        return self.files[pid.role].read(pid.index)

    def write_page(self, pid: PageId, data: bytes) -> None:
        self.files[pid.role].write(pid.index, data)

    def stats_snapshot(self) -> AccessStats:
        return self.stats.snapshot()

    def reset_stats(self) -> None:
        self.stats.reset()

    @contextlib.contextmanager
    def operation(self):
        """Hold every page touched inside the block, so each is read at most once."""
        owned = [f for f in self.files.values() if f._memo is None]
        for f in owned:
            f._memo = {}
        try:
            yield
        finally:
            for f in owned:
                f._memo = None

    def flush(self) -> None:
        for f in self.files.values():
            f.flush()

    def close(self) -> None:
        for f in self.files.values():
            f.close()

    def remove_files(self) -> None:
        self.close()
        for role in ROLES:
            with contextlib.suppress(FileNotFoundError):
                self.path(role).unlink()
