"""Nearly Parseval Paley-Wiener frames on the hyperbolic plane (Poincare disk)."""
from .besov import BesovParams, besov_norm_bestapprox, besov_norm_frame, besov_norm_lp, equivalence_report
from .filters import FilterBank, make_filter_bank
from .frames import CoefficientSet, Frame, FrameAtom, FrameIndex, frame_bounds, reconstruct
from .geometry import DomainError, Isometry, Point, SpatialGrid, ball_volume, build_spatial_grid, hyp_distance
from .hft import (
    SpatialField,
    SpectralField,
    SpectralGrid,
    build_spectral_grid,
    forward_hft,
    inverse_hft,
    plancherel_density,
    spherical_function,
)
from .lattice import Cover, Lattice, PartitionOfUnity, Weights, build_cover, build_lattice, build_weights
from .spectral import Multiplier, apply_multiplier, bernstein_check, best_approximation, project_pw

__all__ = [
    "BesovParams", "besov_norm_bestapprox", "besov_norm_frame", "besov_norm_lp", "equivalence_report",
    "FilterBank", "make_filter_bank", "CoefficientSet", "Frame", "FrameAtom", "FrameIndex", "frame_bounds",
    "reconstruct", "DomainError", "Isometry", "Point", "SpatialGrid", "ball_volume", "build_spatial_grid",
    "hyp_distance", "SpatialField", "SpectralField", "SpectralGrid", "build_spectral_grid", "forward_hft",
    "inverse_hft", "plancherel_density", "spherical_function", "Cover", "Lattice", "PartitionOfUnity", "Weights",
    "build_cover", "build_lattice", "build_weights", "Multiplier", "apply_multiplier", "bernstein_check",
    "best_approximation", "project_pw",
]
__version__ = "0.1.0"
