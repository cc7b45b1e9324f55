"""Exception types for quickvis."""


class QuickvisError(Exception):
    pass


class ParseError(QuickvisError):
    pass


class ValidationError(QuickvisError):
    pass


class OutsideDomain(QuickvisError):
    pass


class DegenerateInput(QuickvisError):
    pass


class DegenerateQuery(QuickvisError):
    pass


class SegmentNotInCell(QuickvisError):
    pass


class NoCommonPoint(QuickvisError):
    pass


class UnreachableVertex(QuickvisError):
    pass


class NoHit(QuickvisError):
    pass
