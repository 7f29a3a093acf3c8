"""Quantities derived from one quasi-mode eigenvector.

With ``W = sum eps^2 |c|^2`` and ``S = sum eps^2 c^2`` (no conjugate):

* ``K = |W / S|**2`` is the quantum excess-noise factor,
* ``K_tilde = N2 * N2_bar`` is the semi-classical (Petermann) factor,
* ``K_tilde / K = Omega * <1/omega>_p`` with ``p_n = eps_n^2 |c_n|^2 / W``.

All of them are invariant under ``c -> z c``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .basis import ModeBasis, SpatialGrid
from .coupling import CouplingMatrix, rate_functional
from .errors import DimensionError, SelfOrthogonalError
from .spectral import SELF_OVERLAP_TOL, QuasiModeSet


@dataclass(frozen=True)
class QuasiModeReport:
    index: int
    c: np.ndarray
    eps: np.ndarray
    omega: np.ndarray
    S: complex
    W: float
    Omega: float
    lambda_: float
    gamma: float
    E_nu: float
    N2: float
    N2_bar: float
    p: np.ndarray
    K: float
    K_tilde: float
    ratio: float
    ratio_excess: float
    omega_bare_mean: float
    U: np.ndarray
    U_bar: np.ndarray
    U2_mean: complex

    @property
    def eigenvalue(self) -> complex:
        """``(lambda - gamma)/2 - i Omega`` rebuilt from the rates."""
        return complex(0.5 * (self.lambda_ - self.gamma), -self.Omega)

    @property
    def K_via_norm(self) -> float:
        """Second route to K: ``N2 * W / E_nu**2``."""
        return self.N2 * self.W / self.E_nu**2


def analyze_vector(
    c,
    basis: ModeBasis,
    gain: Optional[CouplingMatrix] = None,
    loss: Optional[CouplingMatrix] = None,
    index: int = 0,
) -> QuasiModeReport:
    """Evaluate every quasi-mode quantity for coefficient vector ``c``.

    ``c`` need not be normalized; the result does not depend on its scale or
    global phase.

    Raises
    ------
    SelfOrthogonalError
        If ``|sum eps^2 c^2|`` is negligible against ``sum eps^2 |c|^2``;
        K diverges there and is not reported.
    """
    c = np.asarray(c, dtype=complex)
    if c.shape != (basis.n_modes,):
        raise DimensionError(f"vector has shape {c.shape}, basis has {basis.n_modes} modes")
    eps, omega = basis.eps, basis.omega
    eps2 = eps**2
    c2 = np.abs(c) ** 2
    W = float(np.sum(eps2 * c2))
    S = complex(np.sum(eps2 * c * c))
    if not abs(S) > SELF_OVERLAP_TOL * W:
        raise SelfOrthogonalError(
            f"quasi mode {index} is self-orthogonal (|S|={abs(S):.3e}, W={W:.3e}); K diverges"
        )

    p = eps2 * c2 / W
    Omega = float(np.sum(eps2 * omega * c2) / W)
    lam = rate_functional(gain, c, eps) if gain is not None else 0.0
    gam = rate_functional(loss, c, eps) if loss is not None else 0.0

    S2 = abs(S) ** 2
    N2 = float(np.sum(eps2**2 * c2) / S2)
    N2_bar = float(np.sum(c2))
    K = W**2 / S2
    K_tilde = N2 * N2_bar
    ratio = float(Omega * np.sum(p / omega))
    # Cancellation-free form of ratio - 1 = 1/2 sum_ij p_i p_j (w_i - w_j)^2 / (w_i w_j)
    dw = omega[:, None] - omega[None, :]
    ratio_excess = float(0.5 * np.sum(np.outer(p, p) * dw**2 / np.outer(omega, omega)))

    weights = eps2 * c / S
    U = weights @ basis.u
    U_bar = c @ basis.u
    return QuasiModeReport(
        index=index,
        c=c,
        eps=eps,
        omega=omega,
        S=S,
        W=W,
        Omega=Omega,
        lambda_=lam,
        gamma=gam,
        E_nu=float(np.sqrt(Omega)),
        N2=N2,
        N2_bar=N2_bar,
        p=p,
        K=K,
        K_tilde=K_tilde,
        ratio=ratio,
        ratio_excess=ratio_excess,
        omega_bare_mean=float(np.sum(omega * c2) / N2_bar),
        U=U,
        U_bar=U_bar,
        U2_mean=complex(np.sum(weights**2)),
    )


def analyze(
    qset: QuasiModeSet,
    index: int,
    basis: ModeBasis,
    gain: Optional[CouplingMatrix] = None,
    loss: Optional[CouplingMatrix] = None,
) -> QuasiModeReport:
    if qset.flagged[index]:
        raise SelfOrthogonalError(f"quasi mode {index} is flagged self-orthogonal")
    return analyze_vector(qset.vector(index), basis, gain, loss, index=index)


def quasimode_orthogonality_residual(reports: Sequence[QuasiModeReport], grid: SpatialGrid) -> float:
    """Worst deviation of ``(1/V) int U_v Ubar_u dx`` from ``delta_vu``."""
    if not reports:
        raise ValueError("need at least one report")
    for r in reports:
        if r.U.size != grid.size:
            raise DimensionError("report sampled on a different grid")
    U = np.array([r.U for r in reports])
    U_bar = np.array([r.U_bar for r in reports])
    overlap = grid.average(U[:, None, :] * U_bar[None, :, :])
    return float(np.max(np.abs(overlap - np.eye(len(reports)))))


def norm_consistency(report: QuasiModeReport, grid: SpatialGrid) -> tuple:
    """Relative gap between quadrature and algebraic ``N2`` and ``N2_bar``."""
    n2 = grid.average(np.abs(report.U) ** 2)
    n2_bar = grid.average(np.abs(report.U_bar) ** 2)
    return (
        float(abs(n2 - report.N2) / report.N2),
        float(abs(n2_bar - report.N2_bar) / report.N2_bar),
    )
