"""Improper indefinite affine spheres generated by pairs of planar curves."""
from .area import CurvePair, SplitG, SurfaceGrid, accumulate_g, chord_area, surface_grid
from .curves import PlanarCurve, det2, perp
from .fixtures import excusp1_pair, excusp2_pair, get_fixture
from .singular import Kind, area_evolute, classify, singular_analysis, trace_singular_set
from .sphere import SpaceTransform, apply_transform, extract_curves, immerse
from .symmetry import aass_solve, aess_conic, aess_determinant, local_symmetry_points, midline

__all__ = [
    "CurvePair", "SplitG", "SurfaceGrid", "accumulate_g", "chord_area", "surface_grid",
    "PlanarCurve", "det2", "perp",
    "excusp1_pair", "excusp2_pair", "get_fixture",
    "Kind", "area_evolute", "classify", "singular_analysis", "trace_singular_set",
    "SpaceTransform", "apply_transform", "extract_curves", "immerse",
    "aass_solve", "aess_conic", "aess_determinant", "local_symmetry_points", "midline",
]
