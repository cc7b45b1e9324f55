"""quickvis: quickest-visibility and shortest-path-to-segment queries in
polygonal domains with holes, with exact brute-force oracles."""

from .domain import PolygonalDomain, load_domain, save_domain, triangulate
from .errors import (DegenerateInput, DegenerateQuery, NoCommonPoint, NoHit,
                     OutsideDomain, ParseError, QuickvisError, SegmentNotInCell,
                     UnreachableVertex, ValidationError)

__all__ = [
    "PolygonalDomain", "load_domain", "save_domain", "triangulate",
    "QuickvisError", "ParseError", "ValidationError", "OutsideDomain",
    "DegenerateInput", "DegenerateQuery", "SegmentNotInCell",
    "NoCommonPoint", "UnreachableVertex", "NoHit",
]

__version__ = "0.1.0"
