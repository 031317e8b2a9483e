"""Near-boundary asymptotics, rotation numbers and variational polygons."""

from .lazutkin import LazutkinChart, LazutkinFit, lazutkin_chart, lazutkin_residuals, rotation_number, band_confinement
from .polygons import Polygon, DeficitResult, longest_inscribed_polygon, deficit_limit, impact_discrepancy, periodic_orbit_search
from .glancing import GlancingResult, glancing_escape, flat_point_identity

__all__ = [
    "LazutkinChart",
    "LazutkinFit",
    "lazutkin_chart",
    "lazutkin_residuals",
    "rotation_number",
    "band_confinement",
    "Polygon",
    "DeficitResult",
    "longest_inscribed_polygon",
    "deficit_limit",
    "impact_discrepancy",
    "periodic_orbit_search",
    "GlancingResult",
    "glancing_escape",
    "flat_point_identity",
]
