"""Differential geometry of continuously dislocated crystals.

Moving frames and their anholonomy, the dislocation density tensor, Burgers
and Frank vectors, the intrinsic material metric with its curvature, crystal
surfaces, and Weyl-geometric thermal distortion.
"""

__version__ = "0.1.0"

from .errors import DislogeoError
from .exprfield import BoxDomain, ExpressionField, Point, VectorField, lie_bracket, parse_expression
from .frame import (
    ExpressionFrame,
    LoopSpec,
    MovingFrame,
    anholonomy_at,
    anholonomy_tensor_at,
    catalog_frame,
    conformal,
    develop_loop,
    equidistant,
    helical,
    holonomic,
    rescale_frame,
)
from .metric import ExpressionMetric, FrameMetric, christoffel_at, metric_at, riemann_at
from .density import SurfacePatch, burgers_via_surface, density_tensor_at, frank_vector, stokes_check
from .surfaces import Distribution2D, UmbilicalFamily, involutivity_residual, mean_curvature
from .weyl import ThermalModel, WeylStructure, thermal_rescale_frame, weyl_connection_at

__all__ = [
    "BoxDomain",
    "DislogeoError",
    "Distribution2D",
    "ExpressionField",
    "ExpressionFrame",
    "ExpressionMetric",
    "FrameMetric",
    "LoopSpec",
    "MovingFrame",
    "Point",
    "SurfacePatch",
    "ThermalModel",
    "UmbilicalFamily",
    "VectorField",
    "WeylStructure",
    "anholonomy_at",
    "anholonomy_tensor_at",
    "burgers_via_surface",
    "catalog_frame",
    "conformal",
    "equidistant",
    "helical",
    "holonomic",
    "christoffel_at",
    "density_tensor_at",
    "develop_loop",
    "frank_vector",
    "involutivity_residual",
    "lie_bracket",
    "mean_curvature",
    "metric_at",
    "parse_expression",
    "rescale_frame",
    "riemann_at",
    "stokes_check",
    "thermal_rescale_frame",
    "weyl_connection_at",
]
