"""Scenario orchestration: solve, sweep, validate, selftest."""

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .basis import ModeBasis
from .config import ScenarioConfig, build_basis, build_profile, set_path
from .coupling import CouplingMatrix, build_coupling, rate_functional, scale_to_rate
from .dynamics import derive_moment_generator, linewidth, verify_noise_law, verify_threshold_diffusion
from .errors import ConfigError, NotApplicableError, ThresholdConvergenceError
from .quasimode import QuasiModeReport, analyze, norm_consistency
from .spectral import (
    QuasiModeSet,
    assemble,
    biorthogonality_residual,
    completeness_residual,
    eigendecompose,
    select_dominant,
)

THRESHOLD_TOL = 1e-10
MAX_THRESHOLD_ITERATIONS = 100


@dataclass
class Solution:
    config: ScenarioConfig
    basis: ModeBasis
    gain: CouplingMatrix
    loss: Optional[CouplingMatrix]
    qset: QuasiModeSet
    report: QuasiModeReport
    gain_scale: float = 1.0
    threshold_iterations: int = 0


def _solve_once(basis, gain, loss, target):
    qset = eigendecompose(assemble(basis, gain, loss))
    index = select_dominant(qset, target)
    return qset, index


def tune_threshold(basis, gain, loss, target=None):
    """Rescale ``gain`` until gain and loss rates of the dominant mode agree.

    Fixed-point iteration: each pass rescales the gain so that its rate on
    the current dominant eigenvector equals the loss rate, then re-solves.
    Returns ``(gain, qset, index, scale, iterations)``.
    """
    scale = 1.0
    for it in range(1, MAX_THRESHOLD_ITERATIONS + 1):
        qset, index = _solve_once(basis, gain, loss, target)
        c = qset.vector(index)
        lam = rate_functional(gain, c, basis.eps)
        gam = rate_functional(loss, c, basis.eps)
        if lam > 0 and abs(gam - lam) <= THRESHOLD_TOL * lam:
            return gain, qset, index, scale, it
        if not gam > 0:
            raise ThresholdConvergenceError("dominant mode sees no loss; threshold undefined")
        new_gain = scale_to_rate(gain, c, gam, basis)
        scale *= gam / lam
        gain = new_gain
    raise ThresholdConvergenceError(
        f"gain/loss balance not reached in {MAX_THRESHOLD_ITERATIONS} iterations "
        f"(last |gamma-lambda|/lambda = {abs(gam - lam) / lam:.3e})"
    )


def solve(cfg: ScenarioConfig) -> Solution:
    basis = build_basis(cfg)
    gain = build_coupling(basis, build_profile(cfg.gain, basis, "gain"))
    loss = build_coupling(basis, build_profile(cfg.loss, basis, "loss")) if cfg.loss is not None else None
    scale, iterations = 1.0, 0
    if cfg.threshold:
        gain, qset, index, scale, iterations = tune_threshold(basis, gain, loss, cfg.target_frequency)
    else:
        qset, index = _solve_once(basis, gain, loss, cfg.target_frequency)
    report = analyze(qset, index, basis, gain, loss)
    return Solution(cfg, basis, gain, loss, qset, report, scale, iterations)


def loss_only_K(sol: Solution) -> Optional[float]:
    """K of the bare cavity (loss without gain), the usual cavity-decay estimate."""
    if sol.loss is None:
        return None
    qset, index = _solve_once(sol.basis, None, sol.loss, sol.config.target_frequency)
    return analyze(qset, index, sol.basis, None, sol.loss).K


def _f(x) -> float:
    return float(x)


def _report_dict(r: QuasiModeReport) -> dict:
    return {
        "index": r.index,
        "Omega": _f(r.Omega),
        "lambda": _f(r.lambda_),
        "gamma": _f(r.gamma),
        "E_nu": _f(r.E_nu),
        "N2": _f(r.N2),
        "N2_bar": _f(r.N2_bar),
        "K": _f(r.K),
        "K_tilde": _f(r.K_tilde),
        "ratio": _f(r.ratio),
        "ratio_excess": _f(r.ratio_excess),
        "omega_bare_mean": _f(r.omega_bare_mean),
        "p": [_f(v) for v in r.p],
        "c_re": [_f(v) for v in r.c.real],
        "c_im": [_f(v) for v in r.c.imag],
    }


def _residuals(sol: Solution) -> dict:
    n2, n2_bar = norm_consistency(sol.report, sol.basis.grid)
    out = {
        "biorthogonality": biorthogonality_residual(sol.qset, sol.basis),
        "completeness": completeness_residual(sol.qset, sol.basis) if not sol.qset.flagged.any() else None,
        "norm_N2": n2,
        "norm_N2_bar": n2_bar,
        "eigen_residual_max": _f(sol.qset.residuals.max() / max(sol.qset.norm_a, 1e-300)),
        "left_residual_max": _f(sol.qset.left_residuals.max() / max(sol.qset.norm_a, 1e-300)),
        "K_route_gap": _f(abs(sol.report.K_via_norm - sol.report.K) / sol.report.K),
    }
    return out


def _check_finite(obj, path=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}" if path else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise FloatingPointError(f"non-finite output field {path}")


def _output(sol: Solution, dynamics: Optional[dict] = None) -> dict:
    cfg = sol.config
    out = {
        "report": _report_dict(sol.report),
        "residuals": _residuals(sol),
        "threshold": {
            "applied": cfg.threshold,
            "gain_scale": _f(sol.gain_scale),
            "iterations": sol.threshold_iterations,
        },
        "loss_only_K": loss_only_K(sol),
        "warnings": [f"near-degenerate eigenvalues {list(p)}" for p in sol.qset.degenerate_pairs],
        "dynamics": dynamics or {"status": "skipped", "reason": "not requested"},
        "provenance": {
            "config_hash": cfg.config_hash(),
            "tool_version": __version__,
            "seed": cfg.seed,
        },
    }
    _check_finite(out)
    return out


def run_solve(cfg: ScenarioConfig) -> dict:
    return _output(solve(cfg))


def run_validate(cfg: ScenarioConfig) -> dict:
    """Solve, then check the noise dynamics against the moment oracle."""
    if cfg.loss is not None and not cfg.threshold:
        raise ConfigError("threshold", "validation with a loss reservoir requires threshold=true")
    sol = solve(cfg)
    r = sol.report
    gen = derive_moment_generator(sol.gain, sol.loss, sol.basis.omega)
    if cfg.threshold:
        trace = verify_threshold_diffusion(r, gen)
        lw = linewidth(r, 1.0, trace.slope_fit)
        dyn = {
            "check": "threshold_diffusion",
            "status": "pass" if trace.passed else "fail",
            "slope": trace.slope_fit,
            "expected_slope": trace.expected_slope,
            "slope_over_2_lambda_E2": trace.slope_fit / (2 * r.lambda_ * r.E_nu**2),
            "rel_dev": trace.max_rel_dev,
            "linewidth": {
                "photon_number": 1.0,
                "intensity": lw.intensity,
                "power": lw.power,
                "phase_diffusion": lw.phase_diffusion,
                "quadrature_route": lw.quadrature_route,
            },
        }
    else:
        try:
            trace = verify_noise_law(r, gen)
        except NotApplicableError as exc:
            return _output(sol, {"check": "noise_law", "status": "skipped", "reason": str(exc)})
        dyn = {
            "check": "noise_law",
            "status": "pass" if trace.passed else "fail",
            "max_rel_dev": trace.max_rel_dev,
            "lambda": r.lambda_,
        }
    return _output(sol, dyn)


CSV_COLUMNS = [
    "value", "K", "K_tilde", "ratio", "ratio_excess", "Omega", "lambda", "gamma",
    "biorthogonality", "completeness", "norm_N2", "norm_N2_bar", "config_hash",
]


def sweep_rows(cfg: ScenarioConfig, parameter: str, values: Sequence[float]) -> list:
    if values:
        set_path(cfg, parameter, float(values[0]))
    else:
        set_path(cfg, parameter, 1.0)  # validate the path even when nothing runs
    rows = []
    for v in values:
        out = run_solve(set_path(cfg, parameter, float(v)))
        rep, res = out["report"], out["residuals"]
        rows.append({
            "value": float(v),
            **{k: rep[k] for k in ("K", "K_tilde", "ratio", "ratio_excess", "Omega", "lambda", "gamma")},
            **{k: res[k] for k in ("biorthogonality", "completeness", "norm_N2", "norm_N2_bar")},
            "config_hash": out["provenance"]["config_hash"],
        })
    return rows


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else ("" if v is None else v)) for k, v in row.items()})
    return buf.getvalue()


def run_sweep(cfg: ScenarioConfig, parameter: str, values: Sequence[float]) -> str:
    return rows_to_csv(sweep_rows(cfg, parameter, values))


def fit_power_law(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])
