"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from excess_noise.basis import make_box_basis
from excess_noise.config import parse_config
from excess_noise.coupling import CouplingMatrix, build_coupling, interval_profile, uniform_profile
from excess_noise.dynamics import derive_moment_generator, linewidth, verify_noise_law, verify_threshold_diffusion
from excess_noise.quasimode import analyze, analyze_vector
from excess_noise.runner import fit_power_law, solve, sweep_rows
from excess_noise.scenarios import _random_interval, random_config, random_threshold_config
from excess_noise.spectral import (
    assemble,
    biorthogonality_residual,
    completeness_residual,
    eigendecompose,
    select_dominant,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SEED = 20240601


@pytest.fixture(scope="module")
def random_solutions():
    rng = np.random.default_rng(SEED)
    return [solve(random_config(rng, int(rng.integers(2, 17)))) for _ in range(200)]


def test_c01_K_bounds(random_solutions, criterion):
    worst = 0.0
    for sol in random_solutions:
        r = sol.report
        worst = max(worst, (1 - r.K) / r.K, (r.K - r.K_tilde) / r.K_tilde)
    ok = criterion("C1 K >= 1 and K <= K_tilde (200 scenarios, 1e-10)", worst <= 1e-10, f"worst={worst:.2e}")
    assert ok


def test_c02_ratio_identity(random_solutions, criterion):
    worst = 0.0
    for sol in random_solutions:
        r = sol.report
        rhs = r.Omega * np.sum(r.p / sol.basis.omega)
        worst = max(worst, abs(r.K_tilde / r.K - rhs) / rhs)
    ok = criterion("C2 K_tilde/K = Omega sum p/omega (1e-10)", worst <= 1e-10, f"worst={worst:.2e}")
    assert ok


def test_c03_bandwidth_scaling(criterion):
    cfg = parse_config((CONFIGS / "bandwidth.json").read_text())
    spread = float(cfg.basis.n_modes - 1)  # box frequencies are n + offset in these units
    offsets = spread * np.logspace(2, 4, 5) - 2.5
    rows = sweep_rows(cfg, "basis.frequency_offset", list(offsets))
    rel_bw = np.array([spread / r["Omega"] for r in rows])
    excess = np.array([r["ratio_excess"] for r in rows])
    slope = fit_power_law(rel_bw, excess)
    span = rel_bw.max() / rel_bw.min()
    at_1e4 = float(np.interp(np.log(1e-4), np.log(rel_bw[::-1]), excess[::-1]))
    ok = abs(slope - 2.0) <= 0.1 and span >= 99 and at_1e4 < 1e-7
    criterion("C3 bandwidth exponent 2 +- 0.1, correction < 1e-7 at 1e-4", ok,
              f"slope={slope:.4f} span={span:.0f} excess(1e-4)={at_1e4:.2e}")
    assert ok


def test_c04_diagonal_limits(criterion):
    rng = np.random.default_rng(SEED + 4)
    worst_uniform, worst_comp = 0.0, 0.0
    for _ in range(10):
        basis = make_box_basis(int(rng.integers(2, 17)), np.pi, 513)
        gain = build_coupling(basis, uniform_profile(basis.grid, rng.uniform(0.2, 2.0)))
        qset = eigendecompose(assemble(basis, gain))
        worst_uniform = max(worst_uniform, abs(analyze(qset, select_dominant(qset), basis, gain).K - 1))
        both = build_coupling(basis, interval_profile(basis.grid, *_random_interval(rng, np.pi), 1.0))
        loss = CouplingMatrix(both.m, "loss")
        qset = eigendecompose(assemble(basis, both, loss))
        worst_comp = max(worst_comp, abs(analyze(qset, select_dominant(qset), basis, both, loss).K - 1))
    ok = worst_uniform < 1e-6 and worst_comp < 1e-10
    criterion("C4 uniform gain K=1 (1e-6), L=Gamma K=1 (1e-10)", ok,
              f"uniform={worst_uniform:.2e} compensated={worst_comp:.2e}")
    assert ok


def test_c05_loss_only_equivalence(criterion):
    rng = np.random.default_rng(SEED + 5)
    worst_k, worst_vec = 0.0, 0.0
    for _ in range(10):
        basis = make_box_basis(int(rng.integers(2, 17)), np.pi, 513)
        loss = build_coupling(basis, interval_profile(basis.grid, *_random_interval(rng, np.pi), 2.0, "loss"))
        flat = CouplingMatrix(rng.uniform(0.1, 3.0) * np.eye(basis.n_modes))
        q_full, q_bare = eigendecompose(assemble(basis, flat, loss)), eigendecompose(assemble(basis, None, loss))
        i_full, i_bare = select_dominant(q_full), select_dominant(q_bare)
        k_full = analyze(q_full, i_full, basis, flat, loss).K
        k_bare = analyze(q_bare, i_bare, basis, None, loss).K
        worst_k = max(worst_k, abs(k_full - k_bare) / k_bare)
        a, b = q_full.vector(i_full), q_bare.vector(i_bare)
        phase = np.vdot(b, a) / abs(np.vdot(b, a))
        worst_vec = max(worst_vec, float(np.max(np.abs(a - phase * b))))
    ok = worst_k < 1e-10 and worst_vec < 1e-10
    criterion("C5 L=lambda0 I matches loss-only K and eigenvector (1e-10)", ok,
              f"K gap={worst_k:.2e} vector gap={worst_vec:.2e}")
    assert ok


def test_c06_biorthogonality_completeness(random_solutions, criterion):
    worst_bio, worst_comp, worst_left, used = 0.0, 0.0, 0.0, 0
    for sol in random_solutions:
        q = sol.qset
        y = q.eps[:, None] ** 2 * q.right_vectors
        a = assemble(sol.basis, sol.gain, sol.loss).a
        for k in range(q.n):
            r = np.linalg.norm(y[:, k] @ a - q.eigenvalues[k] * y[:, k]) / (np.linalg.norm(y[:, k]) * q.norm_a)
            worst_left = max(worst_left, r)
        if q.degenerate_pairs or q.flagged.any():
            continue
        used += 1
        worst_bio = max(worst_bio, biorthogonality_residual(q, sol.basis))
        worst_comp = max(worst_comp, completeness_residual(q, sol.basis))
    ok = worst_bio < 1e-8 and worst_comp < 1e-8 and worst_left < 1e-9 and used > 0
    criterion("C6 biorthogonality, completeness (1e-8), left theorem (1e-9)", ok,
              f"bio={worst_bio:.2e} comp={worst_comp:.2e} left={worst_left:.2e} n={used}")
    assert ok


def test_c07_noise_law(criterion):
    rng = np.random.default_rng(SEED + 7)
    worst, runs = 0.0, 0
    for _ in range(20):
        sol = solve(random_config(rng, int(rng.integers(2, 7)), loss=False))
        gen = derive_moment_generator(sol.gain, None, sol.basis.omega)
        size = sol.basis.grid.size
        for pos in [None, *rng.integers(1, size - 1, 3)]:
            trace = verify_noise_law(sol.report, gen, position=None if pos is None else int(pos))
            worst = max(worst, trace.max_rel_dev)
            runs += 1
    ok = worst < 1e-6
    criterion("C7 noise law over [0, 3/lambda] (1e-6)", ok, f"worst={worst:.2e} runs={runs}")
    assert ok


@pytest.fixture(scope="module")
def threshold_runs():
    rng = np.random.default_rng(SEED + 8)
    runs = []
    for _ in range(10):
        sol = solve(random_threshold_config(rng, int(rng.integers(2, 7))))
        gen = derive_moment_generator(sol.gain, sol.loss, sol.basis.omega)
        runs.append((sol, verify_threshold_diffusion(sol.report, gen)))
    return runs


def test_c08a_threshold_diffusion(threshold_runs, criterion):
    worst_slope, worst_balance = 0.0, 0.0
    for sol, trace in threshold_runs:
        r = sol.report
        worst_balance = max(worst_balance, abs(r.gamma - r.lambda_) / r.lambda_)
        worst_slope = max(worst_slope, abs(trace.slope_fit / (2 * r.lambda_ * r.E_nu**2 * r.K) - 1))
    ok = worst_slope < 1e-4 and worst_balance <= 1e-10
    criterion("C8a threshold slope = 2 lambda E^2 K (1e-4)", ok,
              f"slope dev={worst_slope:.2e} balance={worst_balance:.1e}")
    assert ok


def test_c08b_linewidth_identity(threshold_runs, criterion):
    worst = 0.0
    for sol, trace in threshold_runs:
        for photons in (1.0, 1e4):
            lw = linewidth(sol.report, photons, trace.slope_fit)
            worst = max(worst, abs(lw.quadrature_route / lw.phase_diffusion - 1))
    ok = worst < 1e-4
    criterion("C8b linewidth 2D_X/I = K lambda^2/(4P) (1e-4)", ok, f"rel dev={worst:.4f}")
    assert ok, f"2D_X/I and K lambda^2/(4P) differ by {worst:.6f} relative (see decisions ledger)"


def test_c09_scale_invariance(criterion):
    rng = np.random.default_rng(SEED + 9)
    sol = solve(random_config(rng, 8))
    c = sol.report.c
    base = analyze_vector(c, sol.basis, sol.gain, sol.loss)
    worst = 0.0
    for _ in range(10):
        z = complex(*rng.normal(size=2)) * 10 ** rng.uniform(-3, 3)
        other = analyze_vector(z * c, sol.basis, sol.gain, sol.loss)
        for name in ("K", "K_tilde", "Omega", "lambda_", "gamma"):
            worst = max(worst, abs(getattr(other, name) / getattr(base, name) - 1))
        worst = max(worst, float(np.max(np.abs(other.p - base.p) / base.p.max())))
    ok = worst < 1e-12
    criterion("C9 invariance under c -> z c (1e-12)", ok, f"worst={worst:.2e}")
    assert ok


def _run(*args):
    cmd = [sys.executable, "-m", "excess_noise.cli", *args]
    return subprocess.run(cmd, capture_output=True, check=True).stdout


def test_c10_determinism(criterion):
    flagship = str(CONFIGS / "flagship.json")
    st = [_run("selftest") for _ in range(2)]
    fl = [_run("solve", "--config", flagship) for _ in range(2)]
    ok = st[0] == st[1] and fl[0] == fl[1] and b'"passed": true' in st[0]
    criterion("C10 bitwise-identical selftest and flagship output", ok,
              f"selftest {len(st[0])} bytes, flagship {len(fl[0])} bytes")
    assert ok
