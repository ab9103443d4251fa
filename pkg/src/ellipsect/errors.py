"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the CLI and the
verdict reports surface verbatim.
"""


class GeometryError(Exception):
    code = "GEOMETRY_ERROR"

    def __init__(self, message="", **info):
        super().__init__(message or self.code)
        self.info = info


class ParallelPlanesError(GeometryError):
    code = "PARALLEL_PLANES"


class DegenerateRestrictionError(GeometryError):
    code = "DEGENERATE_RESTRICTION"


class NoBracketError(GeometryError):
    code = "NO_BRACKET"


class ParseError(GeometryError):
    code = "PARSE_ERROR"


class NotInteriorError(GeometryError):
    code = "NOT_INTERIOR"


class NotFoundError(GeometryError):
    code = "NOT_FOUND"


class NoIntersectionError(GeometryError):
    code = "NO_INTERSECTION"


class NoInteriorError(GeometryError):
    code = "NO_INTERIOR"


class RankDeficientError(GeometryError):
    code = "RANK_DEFICIENT"

    @property
    def condition_gap(self):
        return self.info.get("condition_gap")


class DuplicateConditionError(GeometryError):
    code = "DUPLICATE_CONDITION"


class NotAnEllipseError(GeometryError):
    code = "NOT_AN_ELLIPSE"


class EdgePointError(GeometryError):
    code = "EDGE_POINT"


class DirectionsNotDistinctError(GeometryError):
    code = "DIRECTIONS_NOT_DISTINCT"


class CenterOutsideError(GeometryError):
    code = "CENTER_OUTSIDE"


class NotEllipsoidVerdictError(GeometryError):
    code = "NOT_ELLIPSOID_VERDICT"
