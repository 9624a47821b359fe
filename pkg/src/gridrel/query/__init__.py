"""Query language front end, planner and executor."""

from .parser import parse, parse_expr

__all__ = ["parse", "parse_expr"]
