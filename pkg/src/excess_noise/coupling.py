"""Gain and loss coupling matrices from spatial reservoir profiles.

A reservoir of two-level atoms spread with density ``indicator(x)`` over a
region of measure ``V' = int indicator dx`` couples universe modes i and j
with strength

    m_ij = g * eps_i * eps_j * (1/V') * int indicator(x) u_i(x) u_j(x) dx

where ``g`` lumps injection rate, interaction time and dipole moment into a
single rate constant. The same construction gives the gain matrix (atoms
injected in the upper level) and the loss matrix (lower level).
"""

from dataclasses import dataclass, replace
from typing import Literal, Optional

import numpy as np

from .basis import ModeBasis, SpatialGrid
from .errors import DegenerateProfileError, DimensionError, ScaleError

Kind = Literal["gain", "loss"]

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class ReservoirProfile:
    indicator: np.ndarray
    strength: float
    kind: Kind = "gain"

    def __post_init__(self):
        ind = np.asarray(self.indicator, dtype=float)
        if ind.ndim != 1:
            raise DimensionError("indicator must be a 1D array sampled on the grid")
        if not np.all(np.isfinite(ind)) or np.any(ind < 0):
            raise ValueError("indicator must be finite and non-negative")
        if not np.isfinite(self.strength) or self.strength < 0:
            raise ValueError(f"strength must be >= 0, got {self.strength}")
        if self.kind not in ("gain", "loss"):
            raise ValueError(f"kind must be 'gain' or 'loss', got {self.kind!r}")
        object.__setattr__(self, "indicator", ind)


def uniform_profile(grid: SpatialGrid, strength: float, kind: Kind = "gain") -> ReservoirProfile:
    return ReservoirProfile(np.ones(grid.size), strength, kind)


def interval_profile(grid: SpatialGrid, a: float, b: float, strength: float, kind: Kind = "gain") -> ReservoirProfile:
    """Indicator of ``[a, b]``; interior grid nodes sitting exactly on an edge get 1/2.

    The half weight at an edge node makes the quadrature equal to Simpson's
    rule on the sub-interval when the edge lands on a panel boundary.
    """
    if not a < b:
        raise ValueError(f"interval must satisfy a < b, got [{a}, {b}]")
    x = grid.x
    tol = 1e-12 * grid.extent
    ind = ((x >= a - tol) & (x <= b + tol)).astype(float)
    on_edge = (np.abs(x - a) <= tol) | (np.abs(x - b) <= tol)
    on_edge[[0, -1]] = False
    ind[on_edge] = 0.5
    return ReservoirProfile(ind, strength, kind)


@dataclass(frozen=True)
class CouplingMatrix:
    """Real symmetric, positive semi-definite gain (L) or loss (Gamma) matrix."""

    m: np.ndarray
    kind: Kind = "gain"
    strength: float = float("nan")
    profile: Optional[ReservoirProfile] = None

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"coupling matrix must be square, got shape {m.shape}")
        scale = np.max(np.abs(m)) if m.size else 0.0
        if np.max(np.abs(m - m.T), initial=0.0) > SYMMETRY_TOL * scale:
            raise ValueError("coupling matrix is not symmetric")
        if scale > 0 and np.linalg.eigvalsh(m).min() < -PSD_TOL * scale:
            raise ValueError("coupling matrix is not positive semi-definite")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @classmethod
    def zeros(cls, n: int, kind: Kind = "gain") -> "CouplingMatrix":
        return cls(np.zeros((n, n)), kind, 0.0)

    def scaled(self, factor: float) -> "CouplingMatrix":
        return replace(self, m=self.m * factor, strength=self.strength * factor)


def build_coupling(basis: ModeBasis, profile: ReservoirProfile) -> CouplingMatrix:
    grid = basis.grid
    if profile.indicator.size != grid.size:
        raise DimensionError(
            f"profile has {profile.indicator.size} samples, basis grid has {grid.size}"
        )
    measure = grid.integrate(profile.indicator)
    if not measure > 0:
        raise DegenerateProfileError("reservoir profile has zero measure on the grid")
    overlap = (basis.u * (grid.weights * profile.indicator)) @ basis.u.T / measure
    m = profile.strength * np.outer(basis.eps, basis.eps) * overlap
    m = 0.5 * (m + m.T)
    return CouplingMatrix(m, profile.kind, float(profile.strength), profile)


def rate_functional(matrix, c, eps) -> float:
    """``sum_nm M_nm eps_n eps_m c_n^* c_m / sum_n eps_n^2 |c_n|^2``.

    For the gain matrix this is the amplification rate of the quasi mode with
    coefficients ``c``; for the loss matrix, its damping rate.
    """
    m = matrix.m if isinstance(matrix, CouplingMatrix) else np.asarray(matrix)
    v = np.asarray(eps) * np.asarray(c)
    num = np.vdot(v, m @ v)
    return float(num.real / np.vdot(v, v).real)


def scale_to_rate(matrix: CouplingMatrix, c, target_rate: float, basis: ModeBasis) -> CouplingMatrix:
    """Rescale ``matrix`` so its rate functional on ``c`` equals ``target_rate``."""
    current = rate_functional(matrix, c, basis.eps)
    if current == 0.0 or not np.isfinite(current):
        raise ScaleError(f"cannot scale a matrix whose current rate is {current}")
    if target_rate == current:
        return matrix
    return matrix.scaled(target_rate / current)
