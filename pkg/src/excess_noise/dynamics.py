"""Moment-equation oracle for the multimode amplifier/damping master equation.

The master equation is quadratic in the field operators, so first and second
moments obey a closed linear system. With ``B = (L - Gamma)/2 - i diag(omega)``
(complex symmetric) and moments

    mean_k        = <a_k>
    normal_jk     = <a_j^dag a_k>
    anomalous_jk  = <a_j a_k>

the equations are

    d mean/dt      = B mean
    d normal/dt    = conj(B) normal + normal B + L
    d anomalous/dt = B anomalous + anomalous B

Only the gain reservoir feeds normally-ordered noise (the ``+ L`` source);
a zero-temperature loss reservoir only damps. The equations are integrated
with fixed-step RK4 in a frame rotating at a chosen frequency, which
subtracts ``i * frame`` from every mode frequency.

Nothing in this module uses the eigen-solver: the quasi mode enters only
through the probe vector ``eps * c`` when a quadrature variance is read out.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .coupling import CouplingMatrix
from .errors import DimensionError, NotApplicableError, NotAtThresholdError, StepSizeError
from .quasimode import QuasiModeReport

MAX_STEP_RATIO = 1e-3
NOISE_LAW_TOL = 1e-6
DIFFUSION_TOL = 1e-4
THRESHOLD_TOL = 1e-10


@dataclass(frozen=True)
class MomentGenerator:
    b: np.ndarray
    source: np.ndarray
    frame: float = 0.0
    has_loss: bool = False

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def max_rate(self) -> float:
        """Spectral norm of the rotating-frame drift; bounds every mean-field rate."""
        return float(np.linalg.norm(self.b, 2))

    def suggested_dt(self, ratio: float = MAX_STEP_RATIO) -> float:
        rate = self.max_rate
        return ratio / rate if rate > 0 else np.inf

    def derivatives(self, mean, normal, anomalous):
        b = self.b
        return (
            b @ mean,
            b.conj() @ normal + normal @ b + self.source,
            b @ anomalous + anomalous @ b,
        )

    def in_frame(self, frame: float) -> "MomentGenerator":
        n = self.n
        b = self.b + 1j * (frame - self.frame) * np.eye(n)
        return replace(self, b=b, frame=float(frame))


def derive_moment_generator(
    gain: Optional[CouplingMatrix],
    loss: Optional[CouplingMatrix],
    omega,
    frame: float = 0.0,
) -> MomentGenerator:
    omega = np.asarray(omega, dtype=float)
    n = omega.size
    for mat in (gain, loss):
        if mat is not None and mat.n != n:
            raise DimensionError(f"{mat.kind} matrix is {mat.n}x{mat.n}, expected {n}x{n}")
    L = gain.m if gain is not None else np.zeros((n, n))
    G = loss.m if loss is not None else np.zeros((n, n))
    b = (0.5 * (L - G)).astype(complex)
    b[np.diag_indices(n)] -= 1j * (omega - frame)
    return MomentGenerator(
        b=b,
        source=L.astype(complex),
        frame=float(frame),
        has_loss=loss is not None and bool(np.any(G)),
    )


@dataclass(frozen=True)
class MomentState:
    t: float
    mean: np.ndarray
    normal: np.ndarray
    anomalous: np.ndarray
    frame: float = 0.0

    @classmethod
    def vacuum(cls, n: int, frame: float = 0.0, t: float = 0.0) -> "MomentState":
        z = np.zeros((n, n), dtype=complex)
        return cls(t=t, mean=np.zeros(n, dtype=complex), normal=z, anomalous=z.copy(), frame=frame)

    def displaced(self, alpha) -> "MomentState":
        """Apply a coherent displacement ``a -> a + alpha``.

        Second moments pick up the products of the displacement with itself
        and with the existing means, so covariances stay unchanged.
        """
        alpha = np.asarray(alpha, dtype=complex)
        m = self.mean
        normal = self.normal + np.outer(alpha.conj(), m) + np.outer(m.conj(), alpha) + np.outer(alpha.conj(), alpha)
        anomalous = self.anomalous + np.outer(alpha, m) + np.outer(m, alpha) + np.outer(alpha, alpha)
        return replace(self, mean=m + alpha, normal=normal, anomalous=anomalous)

    def check(self, tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
        """Raise ``AssertionError`` if the moments are not those of a physical state."""
        scale = max(1.0, float(np.max(np.abs(self.normal), initial=0.0)))
        if np.max(np.abs(self.normal - self.normal.conj().T), initial=0.0) > tol * scale:
            raise AssertionError("normal moments are not Hermitian")
        if np.max(np.abs(self.anomalous - self.anomalous.T), initial=0.0) > tol * scale:
            raise AssertionError("anomalous moments are not symmetric")
        cov = self.normal - np.outer(self.mean.conj(), self.mean)
        herm = 0.5 * (cov + cov.conj().T)
        if self.mean.size and np.linalg.eigvalsh(herm).min() < -psd_tol * scale:
            raise AssertionError("normal covariance is not positive semi-definite")


def _rk4(gen: MomentGenerator, y, dt):
    m, nrm, an = y
    k1 = gen.derivatives(m, nrm, an)
    k2 = gen.derivatives(*(y_ + 0.5 * dt * k_ for y_, k_ in zip(y, k1)))
    k3 = gen.derivatives(*(y_ + 0.5 * dt * k_ for y_, k_ in zip(y, k2)))
    k4 = gen.derivatives(*(y_ + dt * k_ for y_, k_ in zip(y, k3)))
    return tuple(
        y_ + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for y_, a, b, c, d in zip(y, k1, k2, k3, k4)
    )


def _check_step(gen: MomentGenerator, dt: float, max_step_ratio: float) -> None:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt * gen.max_rate > max_step_ratio * (1 + 1e-12):
        raise StepSizeError(dt, gen.suggested_dt(max_step_ratio))


def evolve_trace(
    state: MomentState,
    generator: MomentGenerator,
    t_final: float,
    dt: Optional[float] = None,
    samples: int = 0,
    max_step_ratio: float = MAX_STEP_RATIO,
):
    """Integrate from ``state.t`` to ``t_final``; return the sampled states.

    ``samples`` evenly spaced intermediate states are recorded in addition to
    the initial and final ones (the sample times are snapped to steps).
    """
    if generator.n != state.mean.size:
        raise DimensionError("generator and state have different mode counts")
    if generator.frame != state.frame:
        generator = generator.in_frame(state.frame)
    span = t_final - state.t
    if span < 0:
        raise ValueError("t_final lies before the state time")
    if dt is None:
        dt = generator.suggested_dt(max_step_ratio)
        if not np.isfinite(dt):
            dt = span / 1000 if span > 0 else 1.0
    _check_step(generator, dt, max_step_ratio)
    steps = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
    h = span / steps if steps else 0.0
    record = set()
    if samples and steps:
        record = {int(round(k * steps / (samples + 1))) for k in range(1, samples + 1)}
    y = (state.mean, state.normal, state.anomalous)
    out = [state]
    for k in range(1, steps + 1):
        y = _rk4(generator, y, h)
        if k in record or k == steps:
            out.append(MomentState(state.t + k * h, y[0], y[1], y[2], state.frame))
    return out


def evolve(
    state: MomentState,
    generator: MomentGenerator,
    t_final: float,
    dt: Optional[float] = None,
    max_step_ratio: float = MAX_STEP_RATIO,
) -> MomentState:
    """Classical RK4 with fixed step; refuses steps with ``dt * rate > max_step_ratio``."""
    return evolve_trace(state, generator, t_final, dt, 0, max_step_ratio)[-1]


@dataclass(frozen=True)
class QuadratureProbe:
    """Quadrature of one quasi mode, at a grid index or averaged over space."""

    report: QuasiModeReport
    position: Optional[int] = None

    @property
    def rotating_frequency(self) -> float:
        return self.report.Omega

    def mode_weights(self):
        """``(|U|^2, U^2)`` at the probe point, or their spatial averages."""
        r = self.report
        if self.position is None:
            return r.N2, r.U2_mean
        u = r.U[self.position]
        return float(abs(u) ** 2), complex(u * u)


def quadrature_variance(state: MomentState, probe: QuadratureProbe) -> float:
    r = probe.report
    v = r.eps * r.c
    if v.size != state.mean.size:
        raise DimensionError("probe and state have different mode counts")
    u_abs2, u_sq = probe.mode_weights()
    phase = np.exp(1j * (probe.rotating_frequency - state.frame) * state.t)
    m = v @ state.mean * phase
    cc = (v @ state.anomalous @ v) * phase**2
    ncc = np.vdot(v, state.normal @ v).real
    var = u_abs2 * r.W + 2.0 * u_abs2 * (ncc - abs(m) ** 2) + 2.0 * (u_sq * (cc - m * m)).real
    return float(var)


@dataclass(frozen=True)
class NoiseTrace:
    times: np.ndarray
    variance: np.ndarray
    reference: np.ndarray
    slope_fit: float = float("nan")
    expected_slope: float = float("nan")
    max_rel_dev: float = float("nan")
    passed: bool = False


def noise_law_reference(report: QuasiModeReport, times, position: Optional[int] = None, k_scale: float = 1.0):
    """Closed-form solution from vacuum of ``dV/dt = lambda V + lambda |U|^2 W``.

    Position-averaged, ``|U|^2 W`` becomes ``N2 W = E_nu^2 K``.
    """
    if position is None:
        noise = report.E_nu**2 * report.K * k_scale
    else:
        noise = abs(report.U[position]) ** 2 * report.W * k_scale
    times = np.asarray(times)
    return noise * (2.0 * np.exp(report.lambda_ * times) - 1.0)


def _frame_generator(generator: MomentGenerator, report: QuasiModeReport) -> MomentGenerator:
    return generator.in_frame(report.Omega)


def verify_noise_law(
    report: QuasiModeReport,
    generator: MomentGenerator,
    horizon: Optional[float] = None,
    position: Optional[int] = None,
    samples: int = 60,
    dt: Optional[float] = None,
    k_scale: float = 1.0,
    tol: float = NOISE_LAW_TOL,
) -> NoiseTrace:
    """Integrate from vacuum and compare with the analytic amplifier noise law.

    ``k_scale`` multiplies the noise term of the reference only; values other
    than 1 exist to confirm that the comparison can fail.
    """
    if generator.has_loss:
        raise NotApplicableError("the amplifier noise law applies to gain-only systems")
    if not report.lambda_ > 0:
        raise NotApplicableError(f"amplification rate {report.lambda_} <= 0")
    horizon = 3.0 / report.lambda_ if horizon is None else horizon
    gen = _frame_generator(generator, report)
    states = evolve_trace(MomentState.vacuum(gen.n, frame=gen.frame), gen, horizon, dt, samples)
    probe = QuadratureProbe(report, position)
    times = np.array([s.t for s in states])
    var = np.array([quadrature_variance(s, probe) for s in states])
    ref = noise_law_reference(report, times, position, k_scale)
    dev = float(np.max(np.abs(var - ref) / np.abs(ref)))
    return NoiseTrace(times, var, ref, max_rel_dev=dev, passed=dev < tol)


def _fit_slope(times, values):
    half = times >= times[0] + 0.5 * (times[-1] - times[0])
    t, v = times[half], values[half]
    design = np.vstack([t, np.ones_like(t)]).T
    (slope, _), *_ = np.linalg.lstsq(design, v, rcond=None)
    return float(slope)


def verify_threshold_diffusion(
    report: QuasiModeReport,
    generator: MomentGenerator,
    horizon: Optional[float] = None,
    samples: int = 80,
    dt: Optional[float] = None,
    tol: float = DIFFUSION_TOL,
) -> NoiseTrace:
    """Check that the averaged variance grows linearly at ``2 lambda E^2 K``.

    The least-squares slope is taken over the second half of the horizon.
    """
    lam, gam = report.lambda_, report.gamma
    if lam == 0.0 and gam == 0.0:
        if horizon is None:
            raise NotApplicableError("no gain or loss: pass an explicit horizon")
    elif abs(gam - lam) > THRESHOLD_TOL * abs(lam):
        raise NotAtThresholdError(f"|gamma - lambda|/lambda = {abs(gam - lam) / abs(lam):.3e} > {THRESHOLD_TOL}")
    horizon = 5.0 / lam if horizon is None else horizon
    gen = _frame_generator(generator, report)
    states = evolve_trace(MomentState.vacuum(gen.n, frame=gen.frame), gen, horizon, dt, samples)
    probe = QuadratureProbe(report)
    times = np.array([s.t for s in states])
    var = np.array([quadrature_variance(s, probe) for s in states])
    expected = 2.0 * lam * report.E_nu**2 * report.K
    slope = _fit_slope(times, var)
    ref = report.E_nu**2 * report.K + expected * times
    if expected == 0.0:
        dev = abs(slope)
    else:
        dev = abs(slope / expected - 1.0)
    return NoiseTrace(times, var, ref, slope_fit=slope, expected_slope=expected, max_rel_dev=dev, passed=dev < tol)


@dataclass(frozen=True)
class Linewidth:
    intensity: float
    power: float
    phase_diffusion: float
    quadrature_route: float


def linewidth(report: QuasiModeReport, photon_number: float, quadrature_diffusion: Optional[float] = None) -> Linewidth:
    """Intensity, output power and phase diffusion of a laser at threshold.

    ``phase_diffusion`` is ``K lambda^2 / (4 P)``. ``quadrature_route`` is
    ``2 D_X / I`` with ``2 D_X`` the variance growth rate (by default the
    analytic ``2 lambda E^2 K``, or a measured slope if given). Under these
    definitions of I and P the two differ by exactly a factor 2.
    """
    if not photon_number > 0:
        raise ValueError(f"photon number must be positive, got {photon_number}")
    lam, gam = report.lambda_, report.gamma
    if abs(gam - lam) > THRESHOLD_TOL * abs(lam) or lam == 0.0:
        raise NotAtThresholdError("linewidth is defined at threshold (gamma = lambda > 0)")
    E2 = report.E_nu**2
    intensity = 4.0 * E2 * report.N2 * photon_number
    power = gam * intensity / (4.0 * E2)
    two_dx = 2.0 * lam * E2 * report.K if quadrature_diffusion is None else quadrature_diffusion
    return Linewidth(
        intensity=intensity,
        power=power,
        phase_diffusion=report.K * lam**2 / (4.0 * power),
        quadrature_route=two_dx / intensity,
    )
