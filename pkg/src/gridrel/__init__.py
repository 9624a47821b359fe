"""A relational engine that stores every relation as a grid file."""

from .database import Database, Result
from .gridfile import GridFile, GridStats, SplitPolicy
from .region import GridSpace, RegionSet, from_expr
from .schema import AttrType, Attribute, RelationSchema, char, integer
from .storage import AccessStats

__all__ = [
    "AccessStats",
    "AttrType",
    "Attribute",
    "Database",
    "GridFile",
    "GridSpace",
    "GridStats",
    "RegionSet",
    "RelationSchema",
    "Result",
    "SplitPolicy",
    "char",
    "from_expr",
    "integer",
]
