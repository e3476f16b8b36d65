import hashlib
import math
import os
import subprocess
import sys

import numpy as np

from acceptance_log import record
from sfhd.covariance import CovarianceRequest, covariance_direct, covariance_from_spectrum
from sfhd.errors import SFHDError
from sfhd.fieldsim import (
    HarmonicCoefficients,
    SimulationConfig,
    analyze,
    coefficients_from_variates,
    sample_variates,
    simulate_evolution,
    synthesize,
)
from sfhd.kernel import (
    KernelConfig,
    ModelParams,
    h_alpha_eq_beta,
    h_classical,
    h_eval,
    h_laplace_oracle,
    h_series,
)
from sfhd.spectra import (
    MaternSpectrum,
    angular_spectrum_discrete,
    angular_spectrum_matern,
    angular_spectrum_matern_branch_split,
    two_band_measure,
    ten_atom_measure,
)

CFG = KernelConfig()
MUS = (0.5, 1.0, 2.0, 5.0, 10.0)
TS = (0.05, 0.1, 0.3, 0.5)
GRID_AB = [(a, b) for a in (0.6, 0.8, 1.0) for b in (0.5, 0.8, 1.0) if 1 < a + b <= 2 + 1e-12]
NON_SPECIAL = [ab for ab in GRID_AB if ab[0] != ab[1]]
TEN_ATOM = ten_atom_measure()


def _diff(f, g):
    try:
        return abs(f() - g())
    except SFHDError:
        return math.inf


def test_c01_initial_condition():
    exact_zero = True
    worst = 0.0
    where = None
    for ab in GRID_AB:
        p = ModelParams(*ab)
        for mu in (0.0, 0.5, 1.0, 5.0, 20.0):
            exact_zero &= h_eval(p, CFG, mu, 0.0) == 1.0
            d = abs(h_eval(p, CFG, mu, 1e-5) - 1.0)
            if d > worst:
                worst, where = d, (ab, mu)
    ok = exact_zero and worst <= 1e-6
    record(1, ok, f"H(mu,0)==1: {exact_zero}; max |H(mu,1e-5)-1| = {worst:.3g} at (alpha,beta),mu={where} (tol 1e-6)")
    assert ok


def test_c02_alpha_eq_beta_routes():
    w_ml = w_lap = 0.0
    for a in (0.6, 0.8, 1.0):
        p = ModelParams(a, a)
        for mu in MUS:
            for t in TS:
                w_ml = max(w_ml, _diff(lambda: h_series(p, CFG, mu, t), lambda: h_alpha_eq_beta(p, mu, t)))
                w_lap = max(w_lap, _diff(lambda: h_series(p, CFG, mu, t), lambda: h_laplace_oracle(p, mu, t)))
    ok = w_ml <= 1e-8 and w_lap <= 1e-6
    record(2, ok, f"series vs Mittag-Leffler {w_ml:.3g} (tol 1e-8); series vs Talbot {w_lap:.3g} (tol 1e-6)")
    assert ok


def test_c03_classical():
    p = ModelParams(1.0, 1.0)
    worst = {"cosh": 0.0, "cos": 0.0}
    for mu in MUS:
        for t in TS:
            d = _diff(lambda: h_series(p, CFG, mu, t), lambda: h_classical(p, mu, t))
            key = "cosh" if mu <= 0.5 else "cos"
            worst[key] = max(worst[key], d)
    ok = max(worst.values()) <= 1e-8
    record(3, ok, f"cosh/sinh branch {worst['cosh']:.3g}, cos/sin branch {worst['cos']:.3g} (tol 1e-8)")
    assert ok


def test_c04_general_oracle():
    worst, fails = 0.0, []
    for ab in NON_SPECIAL:
        p = ModelParams(*ab)
        for mu in MUS:
            for t in TS:
                d = _diff(lambda: h_series(p, CFG, mu, t), lambda: h_laplace_oracle(p, mu, t))
                if d > 1e-6:
                    fails.append((ab, mu, t))
                elif d > worst:
                    worst = d
    ok = not fails
    record(4, ok, f"max agreeing diff {worst:.3g} (tol 1e-6); failing points (alpha,beta),mu,t: {fails}")
    assert ok


def test_c05_truncation_stability():
    big = KernelConfig(n_terms=160, m_terms=160)
    worst, fails = 0.0, []
    for ab in GRID_AB:
        p = ModelParams(*ab)
        for mu in MUS:
            for t in TS:
                d = _diff(lambda: h_series(p, CFG, mu, t), lambda: h_series(p, big, mu, t))
                if d > 1e-10:
                    fails.append((ab, mu, t))
                elif d > worst:
                    worst = d
    ok = not fails
    record(5, ok, f"max 80->160 change {worst:.3g} (tol 1e-10); failing points (alpha,beta),mu,t: {fails}")
    assert ok


def test_c06_addition_theorem():
    gammas = (0.0, math.pi / 8, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi)
    worst = 0.0
    for ab in [(1.0, 1.0), (0.8, 1.0), (1.0, 0.8), (0.8, 0.8)]:
        p = ModelParams(*ab)
        sp = angular_spectrum_discrete(TEN_ATOM, p, CFG, 100, 0.1, 0.1)
        r0 = covariance_direct(TEN_ATOM, p, CFG, CovarianceRequest(0.0, 0.1, 0.1))
        for g in gammas:
            d = abs(covariance_direct(TEN_ATOM, p, CFG, CovarianceRequest(g, 0.1, 0.1)) - covariance_from_spectrum(sp, g))
            worst = max(worst, d / r0)
    ok = worst <= 1e-6
    record(6, ok, f"max |direct - spectral| / R(1,0.1,0.1) = {worst:.3g} (tol 1e-6)")
    assert ok


def test_c07_branch_split():
    spec = MaternSpectrum(1.0, 1.0, 2.0)
    p = ModelParams(1.0, 1.0)
    ls = [0, 2, 5]
    single = angular_spectrum_matern(spec, p, CFG, 5, 0.1, 0.1).values[ls]
    split = angular_spectrum_matern_branch_split(spec, p, ls, 0.1, 0.1)
    worst = float(np.max(np.abs(single - split) / np.abs(split)))
    ok = worst <= 1e-7
    record(7, ok, f"max relative difference {worst:.3g} over l={ls} (tol 1e-7)")
    assert ok


def test_c08_monte_carlo():
    p = ModelParams(0.8, 1.0)
    t, l_max, seeds = 0.05, 20, 2000
    ls = [0, 1, 2, 5, 10, 20]
    cl = angular_spectrum_discrete(TEN_ATOM, p, CFG, l_max, t, t).values
    per_seed = np.empty((seeds, len(ls)))
    for seed in range(seeds):
        v = sample_variates(seed, l_max, len(TEN_ATOM.atoms))
        a = coefficients_from_variates(TEN_ATOM, p, CFG, v, t)
        for j, l in enumerate(ls):
            per_seed[seed, j] = np.mean(np.abs(a.coeffs[l, l_max - l : l_max + l + 1]) ** 2)
    mean = per_seed.mean(axis=0)
    se = per_seed.std(axis=0, ddof=1) / math.sqrt(seeds)
    z = np.abs(mean - cl[ls]) / se
    ok = bool(np.all(z <= 4))
    record(8, ok, "z-scores " + ", ".join(f"l={l}:{zz:.2f}" for l, zz in zip(ls, z)) + " (tol 4)")
    assert ok


def test_c09_round_trip():
    rng = np.random.default_rng(2024)
    a = rng.standard_normal((21, 21)) + 1j * rng.standard_normal((21, 21))
    c = HarmonicCoefficients.from_nonnegative(0.0, a)
    g = synthesize(c, SimulationConfig(l_max=20, grid_n_theta=256, grid_n_phi=512))
    worst = float(np.max(np.abs(analyze(g, 20).coeffs - c.coeffs)))
    ok = worst <= 1e-4
    record(9, ok, f"max coefficient error {worst:.3g} (tol 1e-4)")
    assert ok


def test_c10_trends():
    h1 = h_eval(ModelParams(1.0, 1.0), CFG, 1.0, 0.1)
    h08 = h_eval(ModelParams(0.8, 1.0), CFG, 1.0, 0.1)
    ok_a = h08 < h1

    sim = SimulationConfig(l_max=100, seed=0, times=(0.0, 0.05), grid_n_theta=128, grid_n_phi=256)
    res = simulate_evolution(two_band_measure(), ModelParams(1.0, 1.0, c=1.0, d_coef=2.0), CFG, sim)
    v0, v1 = res[0][1].sample_variance(), res[1][1].sample_variance()
    ok_b = v1 < v0

    ok_c = True
    ratios = []
    for ab in [(1.0, 1.0), (0.8, 1.0), (1.0, 0.8), (0.8, 0.8)]:
        p = ModelParams(*ab)
        c0 = angular_spectrum_discrete(TEN_ATOM, p, CFG, 10, 0.0, 0.0).values
        c1 = angular_spectrum_discrete(TEN_ATOM, p, CFG, 10, 0.1, 0.1).values
        for l in (2, 5, 10):
            ok_c &= c1[l] < c0[l]
            ratios.append(c1[l] / c0[l])
    ok = ok_a and ok_b and ok_c
    record(
        10,
        ok,
        f"(a) H(0.8,1)={h08:.6g} < H(1,1)={h1:.6g}: {ok_a}; (b) var {v1:.6g} < {v0:.6g}: {ok_b}; "
        f"(c) max C_l(0.1)/C_l(0) = {max(ratios):.4g} < 1: {ok_c}",
    )
    assert ok


def test_c11_determinism(tmp_path):
    digests = {}
    for threads in (1, 2, 8):
        for run in range(2):
            out = tmp_path / f"t{threads}_r{run}"
            env = dict(os.environ, SFHD_THREADS=str(threads))
            res = subprocess.run(
                [sys.executable, "-m", "sfhd.cli", "simulate", "--output.dir", str(out)],
                env=env,
                capture_output=True,
                text=True,
            )
            assert res.returncode == 0, res.stderr
            h = hashlib.sha256()
            for name in sorted(os.listdir(out)):
                h.update(name.encode())
                h.update((out / name).read_bytes())
            digests[(threads, run)] = h.hexdigest()
    ok = len(set(digests.values())) == 1
    record(11, ok, f"{len(digests)} runs at 1/2/8 threads, {len(set(digests.values()))} distinct output digest(s)")
    assert ok
