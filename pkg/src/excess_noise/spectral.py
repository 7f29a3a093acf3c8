"""Non-Hermitian quasi-mode eigenproblem.

The coefficients ``c`` of a quasi mode ``A = sum_n eps_n c_n a_n / E`` solve

    sum_n (L_mn/2 - Gamma_mn/2 - i delta_mn omega_n) (eps_n/eps_m) c_n = mu c_m

with ``mu = lambda/2 - gamma/2 - i Omega``. The matrix is a diagonal similarity
transform of a complex *symmetric* matrix, so the left eigenvector belonging
to ``c`` is ``eps**2 * c`` (a plain transpose, no conjugation). That fact
gives the unconjugated biorthogonality and completeness relations checked
here.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import ModeBasis
from .coupling import CouplingMatrix
from .errors import (
    CompletenessUnavailableError,
    DegeneracyWarning,
    DimensionError,
    NoSelectableModeError,
    SolverError,
)

RESIDUAL_TOL = 1e-10
LEFT_RESIDUAL_TOL = 1e-9
SELF_OVERLAP_TOL = 1e-12
DEGENERACY_TOL = 1e-8
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SystemMatrix:
    a: np.ndarray
    eps: np.ndarray
    omega: np.ndarray
    gain: Optional[CouplingMatrix] = None
    loss: Optional[CouplingMatrix] = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @classmethod
    def from_array(cls, a, eps=None) -> "SystemMatrix":
        """Wrap an arbitrary square matrix (for testing the solver alone)."""
        a = np.array(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"system matrix must be square, got {a.shape}")
        eps = np.ones(a.shape[0]) if eps is None else np.asarray(eps, dtype=float)
        return cls(a=a, eps=eps, omega=eps**2)


def assemble(basis: ModeBasis, gain: Optional[CouplingMatrix], loss: Optional[CouplingMatrix] = None) -> SystemMatrix:
    n = basis.n_modes
    for mat in (gain, loss):
        if mat is not None and mat.n != n:
            raise DimensionError(f"{mat.kind} matrix is {mat.n}x{mat.n}, basis has {n} modes")
    core = np.zeros((n, n), dtype=complex)
    if gain is not None:
        core += 0.5 * gain.m
    if loss is not None:
        core -= 0.5 * loss.m
    core[np.diag_indices(n)] -= 1j * basis.omega
    eps = basis.eps
    a = core * (eps[None, :] / eps[:, None])
    return SystemMatrix(a=a, eps=eps, omega=basis.omega, gain=gain, loss=loss)


@dataclass(frozen=True)
class QuasiModeSet:
    """Full eigendecomposition of a :class:`SystemMatrix`.

    Column ``k`` of ``right_vectors`` is ``c^(k)``, normalized to unit norm
    with its largest-modulus entry real and positive. ``left_vectors`` hold
    the matching left eigenvectors (``eps**2 * c`` whenever that verifies),
    and ``self_overlaps`` are ``left^T c``.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    self_overlaps: np.ndarray
    residuals: np.ndarray
    left_residuals: np.ndarray
    left_from_theorem: np.ndarray
    flagged: np.ndarray
    eps: np.ndarray
    norm_a: float
    degenerate_pairs: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def vector(self, index: int) -> np.ndarray:
        return self.right_vectors[:, index]


def _fix_gauge(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def _inverse_iteration(a: np.ndarray, mu: complex, start: np.ndarray, iterations: int = 4) -> np.ndarray:
    n = a.shape[0]
    scale = max(np.linalg.norm(a, 2), 1.0)
    shift = mu + 1e-13 * scale * (1 + 1j)
    y = start / np.linalg.norm(start)
    for _ in range(iterations):
        try:
            y = np.linalg.solve(a - shift * np.eye(n), y)
        except np.linalg.LinAlgError:
            shift += 1e-10 * scale
            continue
        y /= np.linalg.norm(y)
    return y


def eigendecompose(sys: SystemMatrix) -> QuasiModeSet:
    a = sys.a
    n = a.shape[0]
    if n < 1:
        raise DimensionError("empty system")
    if not np.all(np.isfinite(a)):
        raise SolverError("system matrix contains non-finite entries")
    try:
        mu, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"QR iteration failed to converge: {exc}") from exc

    norm_a = float(np.linalg.norm(a, 2))
    eps2 = sys.eps**2
    right = np.empty((n, n), dtype=complex)
    left = np.empty((n, n), dtype=complex)
    res = np.empty(n)
    left_res = np.empty(n)
    from_theorem = np.zeros(n, dtype=bool)

    for k in range(n):
        c = _fix_gauge(vecs[:, k])
        r = np.linalg.norm(a @ c - mu[k] * c)
        if r > RESIDUAL_TOL * norm_a:
            c = _fix_gauge(_inverse_iteration(a, mu[k], c))
            mu[k] = np.vdot(c, a @ c)
            r = np.linalg.norm(a @ c - mu[k] * c)
            if r > RESIDUAL_TOL * norm_a:
                raise SolverError(
                    f"eigenpair {k} has residual {r:.3e} > {RESIDUAL_TOL:.0e}*||A|| after refinement"
                )
        right[:, k] = c
        res[k] = r

        y = eps2 * c
        lr = np.linalg.norm(y @ a - mu[k] * y) / np.linalg.norm(y)
        if lr <= LEFT_RESIDUAL_TOL * norm_a:
            from_theorem[k] = True
        else:
            y = _inverse_iteration(a.T, mu[k], y)
            lr = np.linalg.norm(y @ a - mu[k] * y)
        left[:, k] = y
        left_res[k] = lr

    overlaps = np.einsum("nk,nk->k", left, right)
    scale = np.einsum("nk,nk->k", np.abs(left), np.abs(right))
    flagged = np.abs(overlaps) <= SELF_OVERLAP_TOL * scale

    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(mu[i] - mu[j]) < DEGENERACY_TOL * norm_a:
                pairs.append((i, j))

    return QuasiModeSet(
        eigenvalues=mu,
        right_vectors=right,
        left_vectors=left,
        self_overlaps=overlaps,
        residuals=res,
        left_residuals=left_res,
        left_from_theorem=from_theorem,
        flagged=flagged,
        eps=np.asarray(sys.eps, dtype=float),
        norm_a=norm_a,
        degenerate_pairs=pairs,
    )


def reconstruct(qset: QuasiModeSet) -> np.ndarray:
    """``sum_k mu_k c^(k) (left^(k))^T / S_k``; equals the system matrix."""
    r, l = qset.right_vectors, qset.left_vectors
    return (r * (qset.eigenvalues / qset.self_overlaps)) @ l.T


def _warn_degenerate(qset: QuasiModeSet) -> None:
    if qset.degenerate_pairs:
        warnings.warn(
            f"near-degenerate eigenvalue pairs {qset.degenerate_pairs}; "
            "biorthogonality is not guaranteed there",
            DegeneracyWarning,
            stacklevel=3,
        )


def biorthogonality_residual(qset: QuasiModeSet, basis: ModeBasis) -> float:
    """Largest normalized overlap ``|sum_n eps_n^2 c^(v)_n c^(u)_n|`` for v != u.

    Self-orthogonal (flagged) modes are skipped.
    """
    _warn_degenerate(qset)
    keep = np.flatnonzero(~qset.flagged)
    if keep.size < 2:
        return 0.0
    c = qset.right_vectors[:, keep]
    g = (c * basis.eps[:, None] ** 2).T @ c
    d = np.sqrt(np.abs(np.diag(g)))
    g = np.abs(g) / np.outer(d, d)
    np.fill_diagonal(g, 0.0)
    return float(g.max())


def completeness_residual(qset: QuasiModeSet, basis: ModeBasis) -> float:
    if np.any(qset.flagged):
        raise CompletenessUnavailableError(
            f"self-orthogonal modes {np.flatnonzero(qset.flagged).tolist()} make the expansion incomplete"
        )
    c = qset.right_vectors
    s = np.einsum("n,nk,nk->k", basis.eps**2, c, c)
    total = (basis.eps[:, None] ** 2) * ((c / s) @ c.T)
    return float(np.max(np.abs(total - np.eye(c.shape[0]))))


def select_dominant(qset: QuasiModeSet, target_frequency: Optional[float] = None) -> int:
    """Index of the non-flagged mode with the largest growth rate.

    Ties in the real part are resolved by closeness of the mode frequency
    ``-Im(mu)`` to ``target_frequency``, or by the lowest index without one.
    """
    candidates = np.flatnonzero(~qset.flagged)
    if candidates.size == 0:
        raise NoSelectableModeError("every quasi mode is self-orthogonal")
    mu = qset.eigenvalues[candidates]
    best = mu.real.max()
    tol = TIE_TOL * max(np.abs(mu).max(), 1.0)
    tied = candidates[mu.real >= best - tol]
    if target_frequency is None or tied.size == 1:
        return int(tied[0])
    dist = np.abs(qset.eigenvalues[tied].imag + target_frequency)
    return int(tied[np.argmin(dist)])
