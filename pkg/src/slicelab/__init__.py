"""Certified slice censuses, tangents and dimension diagnostics for planar self-affine sets."""
from .errors import SliceLabError, ValidationError
from .ifs import AffineIFS, AffineMap2, ConvexPolygon, example3_ifs
from .linalg2 import Mat2, MultiCone, ProjInterval, ProjLine, Vec2
from .slicer import Line, SliceCensus, Strip, slice_census
from .takagi import constants, evaluate, takagi_ifs
from .words import Word

__version__ = "0.1.0"

__all__ = [
    "AffineIFS", "AffineMap2", "ConvexPolygon", "Line", "Mat2", "MultiCone", "ProjInterval", "ProjLine",
    "SliceCensus", "SliceLabError", "Strip", "ValidationError", "Vec2", "Word", "constants", "evaluate",
    "example3_ifs", "slice_census", "takagi_ifs",
]
