"""Quasi modes and excess noise of linear open optical systems.

The pipeline runs universe-mode basis -> gain/loss coupling matrices ->
non-Hermitian quasi-mode eigenproblem -> excess-noise factors, with a
moment-equation integrator as an independent check of the noise laws.
"""

__version__ = "0.1.0"

from .basis import ModeBasis, SpatialGrid, make_box_basis, make_custom_basis, uniform_grid
from .coupling import (
    CouplingMatrix,
    ReservoirProfile,
    build_coupling,
    interval_profile,
    rate_functional,
    scale_to_rate,
    uniform_profile,
)
from .spectral import (
    QuasiModeSet,
    SystemMatrix,
    assemble,
    biorthogonality_residual,
    completeness_residual,
    eigendecompose,
    select_dominant,
)
from .quasimode import QuasiModeReport, analyze, analyze_vector, norm_consistency, quasimode_orthogonality_residual

__all__ = [
    "CouplingMatrix",
    "ModeBasis",
    "QuasiModeReport",
    "QuasiModeSet",
    "ReservoirProfile",
    "SpatialGrid",
    "SystemMatrix",
    "analyze",
    "analyze_vector",
    "assemble",
    "biorthogonality_residual",
    "build_coupling",
    "completeness_residual",
    "eigendecompose",
    "interval_profile",
    "make_box_basis",
    "make_custom_basis",
    "norm_consistency",
    "quasimode_orthogonality_residual",
    "rate_functional",
    "scale_to_rate",
    "select_dominant",
    "uniform_grid",
    "uniform_profile",
]
