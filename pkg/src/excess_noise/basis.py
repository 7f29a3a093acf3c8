"""Universe-mode basis on a 1D spatial grid.

Units are natural: hbar = 1 and 2*eps0*V = 1, so the vacuum field amplitude
of a mode is simply ``sqrt(omega)``. The 1D interval of length ``extent``
plays the role of the quantization volume; every volume average
``(1/V) * int d^3x`` becomes ``(1/extent) * int dx``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BasisValidationError, DimensionError, GridError, ResolutionError

MIN_GRID_POINTS = 64
ORTHONORMALITY_TOL = 1e-6


def simpson_weights(n_points: int, h: float) -> np.ndarray:
    """Composite Simpson weights for a uniform grid of ``n_points`` nodes.

    With an odd number of intervals the last three intervals use the
    Simpson 3/8 rule so the whole rule stays fourth order. All weights are
    strictly positive.
    """
    if n_points < 4:
        raise GridError(f"need at least 4 grid points, got {n_points}")
    w = np.zeros(n_points)
    n_int = n_points - 1
    n_simpson = n_int if n_int % 2 == 0 else n_int - 3
    if n_simpson > 0:
        panel = np.full(n_simpson + 1, 2.0)
        panel[1::2] = 4.0
        panel[0] = panel[-1] = 1.0
        w[:n_simpson + 1] = panel * (h / 3.0)
    if n_simpson != n_int:
        tail = np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
        w[n_simpson:] += tail
    return w


@dataclass(frozen=True)
class SpatialGrid:
    x: np.ndarray
    weights: np.ndarray
    extent: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.ndim != 1 or w.shape != x.shape:
            raise GridError("positions and weights must be 1D arrays of equal length")
        if x.size < MIN_GRID_POINTS:
            raise GridError(f"grid needs at least {MIN_GRID_POINTS} points, got {x.size}")
        if np.any(np.diff(x) <= 0):
            raise GridError("grid positions must be strictly increasing")
        if np.any(w <= 0):
            raise GridError("quadrature weights must be positive")
        if not np.isclose(w.sum(), self.extent, rtol=1e-12, atol=0.0):
            raise GridError(f"weights sum to {w.sum()!r}, expected extent {self.extent!r}")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def size(self) -> int:
        return self.x.size

    def integrate(self, f):
        """Quadrature of ``f`` sampled on the grid (last axis)."""
        return np.asarray(f) @ self.weights

    def average(self, f):
        """Volume average ``(1/V) int f dx``."""
        return self.integrate(f) / self.extent


def uniform_grid(length: float, points: int) -> SpatialGrid:
    if not np.isfinite(length) or length <= 0:
        raise GridError(f"grid length must be positive, got {length}")
    x = np.linspace(0.0, length, points)
    w = simpson_weights(points, length / (points - 1))
    return SpatialGrid(x=x, weights=w, extent=length)


@dataclass(frozen=True)
class ModeBasis:
    """Truncated set of real, orthonormal universe modes.

    Attributes
    ----------
    omega : (N,) array
        Mode frequencies, all positive.
    eps : (N,) array
        Vacuum field amplitudes, ``sqrt(omega)``.
    u : (N, G) array
        Mode functions sampled on ``grid``.
    """

    omega: np.ndarray
    eps: np.ndarray
    u: np.ndarray
    grid: SpatialGrid
    gram_residual: float = field(default=0.0)

    @property
    def n_modes(self) -> int:
        return self.omega.size


def gram_matrix(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return (u * grid.weights) @ u.T / grid.extent


def _worst_pair(gram: np.ndarray):
    dev = np.abs(gram - np.eye(gram.shape[0]))
    dev = np.triu(dev)
    n, m = np.unravel_index(np.argmax(dev), dev.shape)
    return int(n) + 1, int(m) + 1, float(dev[n, m])


def make_custom_basis(omega, u, grid: SpatialGrid) -> ModeBasis:
    """Validate user-supplied modes and wrap them as a :class:`ModeBasis`.

    Raises
    ------
    BasisValidationError
        If a frequency is not positive and finite, or if the quadrature Gram
        matrix deviates from the identity by more than 1e-6. The error
        carries the 1-based indices of the worst pair.
    """
    omega = np.array(omega, dtype=float).ravel()
    u = np.array(u, dtype=float)
    if u.ndim == 1:
        u = u[None, :]
    if u.shape != (omega.size, grid.size):
        raise DimensionError(
            f"mode functions have shape {u.shape}, expected ({omega.size}, {grid.size})"
        )
    bad = np.flatnonzero(~np.isfinite(omega) | (omega <= 0))
    if bad.size:
        k = int(bad[0]) + 1
        raise BasisValidationError(k, k, float("nan"), f"frequency of mode {k} must be positive and finite")
    gram = gram_matrix(u, grid)
    n, m, residual = _worst_pair(gram)
    if residual > ORTHONORMALITY_TOL:
        raise BasisValidationError(n, m, residual)
    eps = np.sqrt(omega)
    for arr in (omega, eps, u):
        arr.setflags(write=False)
    return ModeBasis(omega=omega, eps=eps, u=u, grid=grid, gram_residual=residual)


def make_box_basis(n_modes: int, box_length: float, grid_points: int, frequency_offset: float = 0.0) -> ModeBasis:
    """Standing-wave modes ``sqrt(2) sin(n pi x / L)`` of a box, n = 1..N.

    Frequencies follow the unit-speed dispersion ``omega_n = n pi / L``.
    ``frequency_offset`` adds a common carrier to every frequency, which
    narrows the relative bandwidth without touching the mode shapes.
    """
    if n_modes < 1:
        raise DimensionError(f"n_modes must be >= 1, got {n_modes}")
    grid = uniform_grid(box_length, grid_points)
    n = np.arange(1, n_modes + 1)
    u = np.sqrt(2.0) * np.sin(np.outer(n, grid.x) * np.pi / box_length)
    omega = frequency_offset + n * np.pi / box_length
    if grid_points < 4 * n_modes:
        i, j, residual = _worst_pair(gram_matrix(u, grid))
        raise ResolutionError(
            i, j, residual,
            f"{grid_points} grid points cannot resolve {n_modes} modes (need >= {4 * n_modes}); "
            f"worst Gram residual {residual:.3e} at (n={i}, m={j})",
        )
    try:
        return make_custom_basis(omega, u, grid)
    except BasisValidationError as exc:
        if np.isnan(exc.residual):
            raise
        raise ResolutionError(exc.n, exc.m, exc.residual) from exc
