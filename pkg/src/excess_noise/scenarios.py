"""Built-in and randomized scenarios, plus the selftest suite."""

import json
from importlib import resources

import numpy as np

from .basis import make_box_basis
from .config import ScenarioConfig, parse_config, validate_config
from .coupling import CouplingMatrix, build_coupling, interval_profile, uniform_profile
from .dynamics import derive_moment_generator, verify_noise_law, verify_threshold_diffusion
from .quasimode import analyze, analyze_vector
from .runner import loss_only_K, solve
from .spectral import (
    assemble,
    biorthogonality_residual,
    completeness_residual,
    eigendecompose,
    select_dominant,
)

SELFTEST_SEED = 1998


def flagship_config() -> ScenarioConfig:
    text = resources.files("excess_noise").joinpath("fixtures/flagship.json").read_text()
    return parse_config(text)


def _random_interval(rng, length, min_width=0.1):
    a, b = np.sort(rng.uniform(0.0, length, 2))
    if b - a < min_width * length:
        mid = 0.5 * (a + b)
        half = 0.5 * min_width * length
        a, b = max(0.0, mid - half), min(length, mid + half)
    return [float(a), float(b)]


def random_config(rng, n_modes, loss=True, threshold=False, grid_points=None) -> ScenarioConfig:
    """Box basis with random interval gain (and loss) profiles."""
    length = float(np.pi)
    grid_points = grid_points or max(257, 16 * n_modes + 1)
    data = {
        "basis": {"kind": "box", "n_modes": int(n_modes), "box_length": length, "grid_points": int(grid_points)},
        "gain": {"indicator": {"interval": _random_interval(rng, length)}, "strength": float(rng.uniform(0.2, 1.0))},
        "threshold": threshold,
    }
    if loss:
        data["loss"] = {
            "indicator": {"interval": _random_interval(rng, length)},
            "strength": float(rng.uniform(0.5, 2.0)),
        }
    return validate_config(data)


def random_threshold_config(rng, n_modes) -> ScenarioConfig:
    """Threshold scenario in a regime where the tuned gain rate is not tiny
    next to the drift of the moment equations (keeps RK4 runs short).

    A carrier offset and a long box narrow the rotating-frame frequency
    spread; loss covers most of the box so no mode escapes it.
    """
    length = float(4 * np.pi)
    a = float(rng.uniform(0.5, 4.0))
    gain = "uniform" if rng.random() < 0.5 else {"interval": _random_interval(rng, length, 0.3)}
    data = {
        "basis": {"kind": "box", "n_modes": int(n_modes), "box_length": length, "grid_points": 1025,
                  "frequency_offset": 5.0},
        "gain": {"indicator": gain, "strength": 0.1},
        "loss": {"indicator": {"interval": [a, length]}, "strength": float(rng.uniform(0.05, 0.2))},
        "threshold": True,
    }
    return validate_config(data)


def _check(name, passed, value):
    return {"name": name, "passed": bool(passed), "value": float(value)}


def selftest(seed: int = SELFTEST_SEED) -> list:
    rng = np.random.default_rng(seed)
    results = []

    worst_k, worst_ratio, worst_bio, worst_comp = 0.0, 0.0, 0.0, 0.0
    for _ in range(24):
        cfg = random_config(rng, int(rng.integers(2, 9)))
        sol = solve(cfg)
        r = sol.report
        worst_k = max(worst_k, (1 - r.K) / r.K, (r.K - r.K_tilde) / r.K_tilde)
        worst_ratio = max(worst_ratio, abs(r.K_tilde / r.K - r.Omega * np.sum(r.p / r.omega)) / r.ratio)
        worst_bio = max(worst_bio, biorthogonality_residual(sol.qset, sol.basis))
        worst_comp = max(worst_comp, completeness_residual(sol.qset, sol.basis))
    results.append(_check("K_bounds", worst_k <= 1e-10, worst_k))
    results.append(_check("ratio_identity", worst_ratio <= 1e-10, worst_ratio))
    results.append(_check("biorthogonality", worst_bio < 1e-8, worst_bio))
    results.append(_check("completeness", worst_comp < 1e-8, worst_comp))

    basis = make_box_basis(6, np.pi, 513)
    gain = build_coupling(basis, uniform_profile(basis.grid, 1.0))
    qset = eigendecompose(assemble(basis, gain))
    k_uniform = analyze(qset, select_dominant(qset), basis, gain).K
    results.append(_check("uniform_gain_K", abs(k_uniform - 1) < 1e-6, abs(k_uniform - 1)))

    prof = interval_profile(basis.grid, 0.4, 1.9, 1.3)
    both = build_coupling(basis, prof)
    loss = CouplingMatrix(both.m, "loss", both.strength)
    qset = eigendecompose(assemble(basis, both, loss))
    k_comp = analyze(qset, select_dominant(qset), basis, both, loss).K
    results.append(_check("compensated_K", abs(k_comp - 1) < 1e-10, abs(k_comp - 1)))

    loss = build_coupling(basis, interval_profile(basis.grid, 0.0, 1.2, 2.0, "loss"))
    flat = CouplingMatrix(0.7 * np.eye(basis.n_modes), "gain", 0.7)
    q_full = eigendecompose(assemble(basis, flat, loss))
    q_bare = eigendecompose(assemble(basis, None, loss))
    i_full, i_bare = select_dominant(q_full), select_dominant(q_bare)
    gap = abs(analyze(q_full, i_full, basis, flat, loss).K - analyze(q_bare, i_bare, basis, None, loss).K)
    results.append(_check("loss_only_equivalence", gap < 1e-10, gap))

    c = q_full.vector(i_full)
    base = analyze_vector(c, basis, flat, loss)
    worst = 0.0
    for z in (2.5 - 1j, 1e-3j, -7.0):
        other = analyze_vector(z * c, basis, flat, loss)
        worst = max(worst, abs(other.K / base.K - 1), abs(other.K_tilde / base.K_tilde - 1))
    results.append(_check("scale_invariance", worst < 1e-12, worst))

    cfg = random_config(rng, 4, loss=False)
    sol = solve(cfg)
    gen = derive_moment_generator(sol.gain, None, sol.basis.omega)
    trace = verify_noise_law(sol.report, gen)
    results.append(_check("noise_law", trace.passed, trace.max_rel_dev))

    sol = solve(flagship_config())
    gen = derive_moment_generator(sol.gain, sol.loss, sol.basis.omega)
    trace = verify_threshold_diffusion(sol.report, gen)
    results.append(_check("threshold_diffusion", trace.passed, trace.max_rel_dev))
    k_bare = loss_only_K(sol)
    results.append(_check("flagship_K", sol.report.K >= 1.0, sol.report.K))
    results.append(_check("flagship_loss_only_K", k_bare >= 1.0, k_bare))
    return results


def selftest_json(seed: int = SELFTEST_SEED) -> str:
    res = selftest(seed)
    return json.dumps({"seed": seed, "checks": res, "passed": all(r["passed"] for r in res)}, indent=2, sort_keys=True)
