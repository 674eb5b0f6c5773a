"""Hyperbolic Poisson-Voronoi tessellations: sampling, Delaunay complexes, dual graphs,
random walks, anchored expansion and Monte Carlo checks of the geometric estimates."""
from .graph import DualGraph, ExpansionReport, min_expansion
from .hypgeo import HPoint, GeometryError, GuardError, ball_area, dist_h, triangle_area
from .kernels import BACKEND
from .ppp import Sample, condition_root, condition_skeleton_vertex, sample_ball
from .schemes import Scheme, enumerate_schemes
from .tess import DelaunayComplex, delaunay, dual_delaunay_graph, dual_voronoi_graph, voronoi_cells
from .verify import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DelaunayComplex",
    "DualGraph",
    "ExpansionReport",
    "GeometryError",
    "GuardError",
    "HPoint",
    "Sample",
    "Scheme",
    "VerificationReport",
    "ball_area",
    "condition_root",
    "condition_skeleton_vertex",
    "delaunay",
    "dist_h",
    "dual_delaunay_graph",
    "dual_voronoi_graph",
    "enumerate_schemes",
    "min_expansion",
    "sample_ball",
    "triangle_area",
    "voronoi_cells",
]
