"""Finite-volume Anderson Hamiltonians and their spectral statistics."""

__version__ = "0.1.0"

from .eigensolve import DimensionCapError, SpectralData, check_invariants, full_spectrum, window
from .hamiltonian import (
    Boundary,
    DisorderConfig,
    HamiltonianMatrix,
    LatticeCube,
    PotentialField,
    SmoothBump,
    Uniform,
    assemble,
    build_laplacian,
    sample_potential,
    subcube,
)
from .ids import IdsModel, IntegratedDensityOfStates, alpha_window, estimate_ids, ids_window
from .localization import CenterExtractor, centers, decay_fit, lattice_distance
from .two_scale import Decomposition, InfeasibleGeometryError, decompose, decompose_lengths, match

__all__ = [
    "__version__",
    "Boundary",
    "CenterExtractor",
    "Decomposition",
    "DimensionCapError",
    "DisorderConfig",
    "HamiltonianMatrix",
    "IdsModel",
    "InfeasibleGeometryError",
    "IntegratedDensityOfStates",
    "LatticeCube",
    "PotentialField",
    "SmoothBump",
    "SpectralData",
    "Uniform",
    "alpha_window",
    "assemble",
    "build_laplacian",
    "centers",
    "check_invariants",
    "decay_fit",
    "decompose",
    "decompose_lengths",
    "estimate_ids",
    "full_spectrum",
    "ids_window",
    "lattice_distance",
    "match",
    "sample_potential",
    "subcube",
    "window",
]
