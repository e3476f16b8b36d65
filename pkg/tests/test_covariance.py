import math

import numpy as np
import pytest

import oracles

from sfhd.covariance import (
    CovarianceRequest,
    covariance_direct,
    covariance_from_spectrum,
    covariance_grid,
    write_covariance_csv,
)
from sfhd.kernel import KernelConfig, ModelParams, h_classical
from sfhd.spectra import AngularSpectrum, MaternSpectrum, angular_spectrum_discrete, ten_atom_measure

CFG = KernelConfig()
CLASSICAL = ModelParams(1.0, 1.0)
TEN_ATOM = ten_atom_measure()
GAMMAS = [0.0, math.pi / 8, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi]


def test_request_validation():
    with pytest.raises(ValueError):
        CovarianceRequest(-0.1, 0.0, 0.0)
    with pytest.raises(ValueError):
        CovarianceRequest(4.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        CovarianceRequest(1.0, -1.0, 0.0)


def test_gamma_zero_is_variance():
    h = h_classical(CLASSICAL, TEN_ATOM.mus, 0.3)
    r = covariance_direct(TEN_ATOM, CLASSICAL, CFG, CovarianceRequest(0.0, 0.3, 0.3))
    assert r == pytest.approx(math.fsum(h * h * TEN_ATOM.sigma2s), rel=1e-15)


def test_t0_closed_form():
    s = math.sin(math.pi / 8)
    ref = math.fsum(math.sin(2 * mu * s) / (2 * mu * s) * s2 for mu, s2 in TEN_ATOM.atoms)
    assert covariance_direct(TEN_ATOM, CLASSICAL, CFG, CovarianceRequest(math.pi / 4, 0.0, 0.0)) == pytest.approx(ref, rel=1e-14)


def test_spectrum_trivial():
    c0 = AngularSpectrum(0, np.array([4 * math.pi]), 0.0, 0.0)
    assert covariance_from_spectrum(c0, 1.234) == pytest.approx(1.0, rel=1e-15)
    c1 = AngularSpectrum(1, np.array([0.0, 4 * math.pi / 3]), 0.0, 0.0)
    assert abs(covariance_from_spectrum(c1, math.pi / 2)) < 1e-16
    out = covariance_from_spectrum(c0, np.array([0.0, 1.0]))
    assert out.shape == (2,)


@pytest.mark.parametrize("ab", [(1.0, 1.0), (0.8, 1.0), (1.0, 0.8), (0.8, 0.8), (0.6, 0.5)])
def test_addition_theorem(ab):
    p = ModelParams(*ab)
    sp = angular_spectrum_discrete(TEN_ATOM, p, CFG, 100, 0.1, 0.1)
    r0 = covariance_direct(TEN_ATOM, p, CFG, CovarianceRequest(0.0, 0.1, 0.1))
    worst = max(
        abs(covariance_direct(TEN_ATOM, p, CFG, CovarianceRequest(g, 0.1, 0.1)) - covariance_from_spectrum(sp, g))
        for g in GAMMAS
    )
    assert worst <= 1e-6 * r0


def test_variance_dominates_and_symmetry():
    p = ModelParams(0.8, 1.0)
    gammas = np.linspace(0, math.pi, 61)
    for t in (0.0, 0.1, 0.5):
        row = covariance_grid(TEN_ATOM, p, CFG, gammas, [t])[:, 0]
        assert np.all(np.abs(row) <= row[0])
    a = covariance_direct(TEN_ATOM, p, CFG, CovarianceRequest(0.7, 0.1, 0.4))
    b = covariance_direct(TEN_ATOM, p, CFG, CovarianceRequest(0.7, 0.4, 0.1))
    assert a == b


def test_grid_consistency():
    p = ModelParams(0.8, 1.0)
    gammas, times = [0.2, 1.5], [0.0, 0.3]
    mat = covariance_grid(TEN_ATOM, p, CFG, gammas, times)
    for i, g in enumerate(gammas):
        for j, t in enumerate(times):
            assert mat[i, j] == covariance_direct(TEN_ATOM, p, CFG, CovarianceRequest(g, t, t))
    assert covariance_grid(TEN_ATOM, p, CFG, [0.0], [0.0])[0, 0] == pytest.approx(TEN_ATOM.total_mass, rel=1e-15)
    with pytest.raises(ValueError):
        covariance_grid(TEN_ATOM, p, CFG, [], [0.0])


def test_matern_variance():
    spec = MaternSpectrum(1.7, 1.0, 2.0)
    assert covariance_direct(spec, CLASSICAL, CFG, CovarianceRequest(0.0, 0.0, 0.0)) == pytest.approx(1.7, rel=1e-8)


# direct sum, alpha = beta = 1, rows gamma in {0, pi/4, pi/2, pi}, columns t in {0, 0.1, 0.5};
# frozen from a run checked against the mpmath kernel below
CLASSICAL_FIXTURE = [
    [15497.677311665408, 12830.502209654938, 9599.573119409346],
    [8707.809287113085, 8677.224479747296, 7115.000939108385],
    [7208.037969854488, 7113.501077737273, 5669.79535043193],
    [4382.8411053922155, 4379.384637284437, 3610.315162045212],
]


def test_classical_fixture():
    gammas = [0.0, math.pi / 4, math.pi / 2, math.pi]
    mat = covariance_grid(TEN_ATOM, CLASSICAL, CFG, gammas, [0.0, 0.1, 0.5])
    assert np.allclose(mat, CLASSICAL_FIXTURE, rtol=1e-12, atol=0)


def test_classical_fixture_against_mpmath():
    g, t = math.pi / 4, 0.5
    s = math.sin(g / 2)
    ref = math.fsum(
        math.sin(2 * mu * s) / (2 * mu * s) * float(oracles.kernel_classical(1, 1, mu, t)) ** 2 * s2
        for mu, s2 in TEN_ATOM.atoms
    )
    assert CLASSICAL_FIXTURE[1][2] == pytest.approx(ref, rel=1e-13)


def test_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_covariance_csv(path, [0.0, 1.5], [0.1], np.array([[2.0], [0.25]]))
    assert path.read_text() == "gamma_rad,t,t_prime,R\n0,0.1,0.1,2\n1.5,0.1,0.1,0.25\n"
