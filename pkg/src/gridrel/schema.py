"""Relation schemas and the fixed-width, order-preserving tuple encoding.

Every grid attribute value maps to an unsigned integer *key* whose order
matches the attribute's value order.  INTEGER values are stored offset-binary
big-endian, CHAR(n) values as space-padded ASCII.  Keys are the stored bytes
zero-extended to a whole number of words, so a prefix-coded scale value of
``w`` words denotes the key obtained by zero-padding it to full width.
"""

from __future__ import annotations

import enum
import json
import zlib
from dataclasses import dataclass, field

from .errors import DomainError, SchemaError

WORD = 4
INT_OFFSET = 1 << 31
INT_MIN = -(1 << 31)
INT_MAX = (1 << 31) - 1
CHAR_MIN = 0x20  # ' '
CHAR_MAX = 0x7E  # '~'
NAME_WIDTH = 16


def round_up_words(nbytes: int) -> int:
    return -(-nbytes // WORD) * WORD


class AttrType(enum.Enum):
    INTEGER = "INTEGER"
    CHAR = "CHAR"


@dataclass(frozen=True)
class Attribute:
    name: str
    type: AttrType
    width: int = 4

    def __post_init__(self):
        if self.type is AttrType.INTEGER and self.width != 4:
            raise SchemaError(f"INTEGER attribute {self.name} must be 4 bytes wide")
        if self.type is AttrType.CHAR and not 1 <= self.width <= 255:
            raise SchemaError(f"CHAR width of {self.name} must be in 1..255")

    @property
    def key_width(self) -> int:
        return round_up_words(self.width)

    def type_name(self) -> str:
        if self.type is AttrType.INTEGER:
            return "INTEGER"
        return f"CHAR({self.width})"

    def check(self, value):
        """Validate a Python value for this attribute and return it normalized."""
        if self.type is AttrType.INTEGER:
            if isinstance(value, bool) or not isinstance(value, int):
                raise DomainError(f"{self.name}: expected INTEGER, got {value!r}")
            if not INT_MIN <= value <= INT_MAX:
                raise DomainError(f"{self.name}: {value} outside 32-bit range")
            return value
        if not isinstance(value, str):
            raise DomainError(f"{self.name}: expected CHAR({self.width}), got {value!r}")
        if len(value) > self.width:
            raise DomainError(f"{self.name}: {value!r} longer than {self.width}")
        for ch in value:
            if not CHAR_MIN <= ord(ch) <= CHAR_MAX:
                raise DomainError(f"{self.name}: non-printable character {ch!r}")
        return value.rstrip(" ")

    def encode(self, value) -> bytes:
        value = self.check(value)
        if self.type is AttrType.INTEGER:
            return (value + INT_OFFSET).to_bytes(4, "big")
        return value.encode("ascii").ljust(self.width, b" ")

    def decode(self, raw: bytes):
        if self.type is AttrType.INTEGER:
            return int.from_bytes(raw, "big") - INT_OFFSET
        return raw.decode("ascii").rstrip(" ")

    def key_bytes(self, raw: bytes) -> bytes:
        return raw.ljust(self.key_width, b"\0")

    def key_of_raw(self, raw: bytes) -> int:
        return int.from_bytes(self.key_bytes(raw), "big")

    def key(self, value) -> int:
        return self.key_of_raw(self.encode(value))

    def value_of_key(self, key: int):
        raw = key.to_bytes(self.key_width, "big")[: self.width]
        return self.decode(raw)

    @property
    def min_key_bytes(self) -> bytes:
        if self.type is AttrType.INTEGER:
            return b"\0" * 4
        return self.key_bytes(bytes([CHAR_MIN]) * self.width)

    @property
    def max_key_bytes(self) -> bytes:
        if self.type is AttrType.INTEGER:
            return b"\xff" * 4
        return self.key_bytes(bytes([CHAR_MAX]) * self.width)

    @property
    def domain(self) -> tuple[int, int]:
        """Half-open key interval covering every legal value."""
        return (
            int.from_bytes(self.min_key_bytes, "big"),
            int.from_bytes(self.max_key_bytes, "big") + 1,
        )


def integer(name: str) -> Attribute:
    return Attribute(name, AttrType.INTEGER, 4)


def char(name: str, width: int) -> Attribute:
    return Attribute(name, AttrType.CHAR, width)


@dataclass(frozen=True)
class RelationSchema:
    name: str
    attributes: tuple
    grid_attrs: tuple = None
    bucket_capacity: int | None = None
    _offsets: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        attrs = tuple(self.attributes)
        object.__setattr__(self, "attributes", attrs)
        if not attrs:
            raise SchemaError("a relation needs at least one attribute")
        names = [a.name for a in attrs]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate attribute names in {self.name}")
        grid = tuple(range(len(attrs))) if self.grid_attrs is None else tuple(self.grid_attrs)
        object.__setattr__(self, "grid_attrs", grid)
        if len(grid) < 1:
            raise SchemaError("the grid needs at least one attribute (k >= 1)")
        if len(set(grid)) != len(grid) or any(not 0 <= g < len(attrs) for g in grid):
            raise SchemaError(f"bad grid attribute list {grid}")
        if self.bucket_capacity is not None and self.bucket_capacity < 2:
            raise SchemaError("bucket capacity must be at least 2")
        offsets, pos = [], 0
        for a in attrs:
            offsets.append(pos)
            pos += a.width
        object.__setattr__(self, "_offsets", tuple(offsets))

    @property
    def k(self) -> int:
        return len(self.grid_attrs)

    @property
    def tuple_width(self) -> int:
        return sum(a.width for a in self.attributes)

    def index_of(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise SchemaError(f"relation {self.name} has no attribute {name}")

    def grid_attribute(self, dim: int) -> Attribute:
        return self.attributes[self.grid_attrs[dim]]

    def dim_of(self, attr_index: int) -> int | None:
        try:
            return self.grid_attrs.index(attr_index)
        except ValueError:
            return None

    def check(self, values) -> tuple:
        values = tuple(values)
        if len(values) != len(self.attributes):
            raise DomainError(
                f"{self.name} expects {len(self.attributes)} values, got {len(values)}"
            )
        return tuple(a.check(v) for a, v in zip(self.attributes, values))

    def encode(self, values) -> bytes:
        values = tuple(values)
        if len(values) != len(self.attributes):
            raise DomainError(
                f"{self.name} expects {len(self.attributes)} values, got {len(values)}"
            )
        return b"".join(a.encode(v) for a, v in zip(self.attributes, values))

    def decode(self, rec: bytes) -> tuple:
        return tuple(
            a.decode(rec[off : off + a.width]) for a, off in zip(self.attributes, self._offsets)
        )

    def raw_attr(self, rec: bytes, attr_index: int) -> bytes:
        off = self._offsets[attr_index]
        return rec[off : off + self.attributes[attr_index].width]

    def grid_key_bytes(self, rec: bytes, dim: int) -> bytes:
        ai = self.grid_attrs[dim]
        return self.attributes[ai].key_bytes(self.raw_attr(rec, ai))

    def grid_keys(self, rec: bytes) -> tuple:
        return tuple(int.from_bytes(self.grid_key_bytes(rec, d), "big") for d in range(self.k))

    def grid_keys_of_values(self, grid_values) -> tuple:
        grid_values = tuple(grid_values)
        if len(grid_values) != self.k:
            raise DomainError(f"expected {self.k} grid values, got {len(grid_values)}")
        return tuple(self.grid_attribute(d).key(v) for d, v in enumerate(grid_values))

    @property
    def key_widths(self) -> tuple:
        return tuple(self.grid_attribute(d).key_width for d in range(self.k))

    @property
    def domains(self) -> tuple:
        return tuple(self.grid_attribute(d).domain for d in range(self.k))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "attributes": [[a.name, a.type.value, a.width] for a in self.attributes],
            "grid_attrs": list(self.grid_attrs),
            "bucket_capacity": self.bucket_capacity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RelationSchema":
        attrs = tuple(Attribute(n, AttrType(t), w) for n, t, w in d["attributes"])
        return cls(d["name"], attrs, tuple(d["grid_attrs"]), d.get("bucket_capacity"))

    def schema_hash(self) -> int:
        body = dict(self.to_dict())
        body.pop("bucket_capacity")
        return zlib.crc32(json.dumps(body, sort_keys=True).encode())
