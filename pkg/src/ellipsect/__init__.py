"""Recognize ellipsoids among convex bodies from their plane sections."""

__version__ = "0.1.0"

from .bodies import (
    BoundaryPoint,
    ConvexBody,
    Polynomial,
    alonso_c,
    boundary_hit,
    boundary_hits,
    catalog,
    chord_endpoints,
    ellipsoid,
    load_body,
    lookup,
    sphere,
    superellipsoid,
)
from .certifier import (
    CertifyParams,
    Pencil,
    Status,
    Verdict,
    certify_four_sections,
    certify_two_sections,
    find_elliptic_planes,
    sphere_specialization,
)
from .curvature import (
    CurvaturePair,
    Match,
    euler_curvature,
    match_in_three_directions,
    principal_curvatures,
    section_curvature_fd,
)
from .errors import GeometryError
from .fitting import Condition, fit_conic, fit_conic_lsq, fit_quadric, fit_quadric_lsq, is_ellipse
from .kernel import (
    Conic,
    ConicClass,
    Line,
    Plane,
    Quadric,
    QuadricClass,
    classify_conic,
    classify_quadric,
    ellipsoid_geometry,
    restrict_quadric,
)
from .linesys import (
    LineSystem,
    OutwardField,
    find_intersecting_partner,
    longest_chord,
    normal_field,
    outward_from_system,
    verify_outward,
)
from .sections import PlanarCurve, extract_section, line_meets_interior, plane_meets_interior
