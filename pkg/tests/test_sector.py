import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cpbox.sector import (
    build_basis,
    coherent_coefficients,
    default_poisson_cutoff,
    fock_state,
    gaussian_weight,
    number_op,
    poisson_coefficients,
    poisson_tail_mass,
    tunneling_op,
    MATRIX_DIM_CAP,
)


@pytest.mark.parametrize("N,dim", [(0, 1), (1, 2), (100, 101)])
def test_basis_dimension(N, dim):
    assert build_basis(N).dimension == dim


def test_basis_rejects_negative():
    with pytest.raises(ValueError):
        build_basis(-1)


def test_matrix_cap_enforced():
    with pytest.raises(ValueError, match="cap"):
        tunneling_op(build_basis(MATRIX_DIM_CAP + 10))


def test_tunneling_small_cases():
    m1 = tunneling_op(build_basis(1)).entries
    assert_allclose(m1, [[0, 1], [1, 0]], atol=1e-15)
    m2 = tunneling_op(build_basis(2)).entries
    s2 = math.sqrt(2)
    assert_allclose(m2, [[0, s2, 0], [s2, 0, s2], [0, s2, 0]], atol=1e-15)


def test_tunneling_hermitian_N50():
    m = tunneling_op(build_basis(50)).entries
    assert np.max(np.abs(m - m.conj().T)) < 1e-12


def test_number_op_diagonal_and_commutes():
    basis = build_basis(2)
    n_op = number_op(basis).entries
    assert_allclose(np.diag(n_op), [0, 1, 2])
    other = np.diag([3.0, -1.0, 7.0])
    assert_allclose(n_op @ other - other @ n_op, 0, atol=1e-15)


@pytest.mark.parametrize("n", [0, 3, 7])
def test_fock_state_components(n):
    basis = build_basis(7)
    v = fock_state(basis, n).amplitudes
    expected = np.zeros(8)
    expected[n] = 1
    assert_allclose(v, expected)
    nv = number_op(basis).entries
    assert_allclose(np.vdot(v, nv @ v).real, n, atol=1e-14)


def test_fock_state_range_check():
    with pytest.raises(ValueError):
        fock_state(build_basis(3), 4)


def test_coherent_small_analytic():
    v = coherent_coefficients(build_basis(2), nbar=1.0, theta=0.0).amplitudes
    assert_allclose(v, [0.5, 1 / math.sqrt(2), 0.5], atol=1e-14)


def test_coherent_magnitudes_match_exact_binomial():
    # exact rational binomial pmf as the small-N oracle
    N = 30
    nbar_frac = Fraction(15, 2)
    p = nbar_frac / N
    state = coherent_coefficients(build_basis(N), float(nbar_frac), theta=0.3)
    got = np.abs(state.amplitudes) ** 2
    exact = [
        float(math.comb(N, n) * p**n * (1 - p) ** (N - n))
        for n in range(N + 1)
    ]
    assert_allclose(got, exact, rtol=1e-12)


def test_coherent_phase_convention():
    theta = 0.7
    v = coherent_coefficients(build_basis(6), 3.0, theta).amplitudes
    phases = np.angle(v) + theta * np.arange(7)
    # all amplitudes carry e^{-i n theta}; residual phase is 0 mod 2pi
    assert_allclose(np.exp(1j * phases), 1.0, atol=1e-12)


def test_coherent_norm_and_mean_large_N():
    state = coherent_coefficients(build_basis(10**4), nbar=400.0)
    p = np.abs(state.amplitudes) ** 2
    assert abs(p.sum() - 1.0) < 1e-10
    mean = float(np.sum(np.arange(p.size) * p))
    assert abs(mean - 400.0) / 400.0 < 1e-8


def test_coherent_norm_N1e4_nbar100():
    p = np.abs(coherent_coefficients(build_basis(10**4), 100.0).amplitudes) ** 2
    assert abs(p.sum() - 1.0) < 1e-10


def test_coherent_rejects_bad_nbar():
    with pytest.raises(ValueError):
        coherent_coefficients(build_basis(10), 0.0)
    with pytest.raises(ValueError):
        coherent_coefficients(build_basis(10), 10.0)


def test_poisson_ground_weight():
    state = poisson_coefficients(nbar=1.0, cutoff=40)
    assert abs(abs(state.amplitudes[0]) ** 2 - math.exp(-1)) < 1e-12


def test_poisson_mean():
    state = poisson_coefficients(nbar=50.0)
    p = np.abs(state.amplitudes) ** 2
    mean = float(np.sum(np.arange(p.size) * p))
    assert abs(mean - 50.0) / 50.0 < 1e-8


def test_poisson_cutoff_too_small():
    with pytest.raises(ValueError, match="tail mass"):
        poisson_coefficients(nbar=100.0, cutoff=110)


def test_poisson_tail_mass_default_cutoff():
    for nbar in (1.0, 50.0, 400.0):
        assert poisson_tail_mass(nbar, default_poisson_cutoff(nbar)) < 1e-12


def test_poisson_binomial_overlap_large_N():
    # direct inner-product computation at N = 1e6, nbar = 100
    nbar = 100.0
    binom = coherent_coefficients(build_basis(10**6), nbar, theta=0.4)
    pois = poisson_coefficients(nbar, theta=0.4)
    fidelity = abs(binom.overlap(pois)) ** 2
    assert fidelity > 0.999


def test_poisson_binomial_fidelity_monotone():
    nbar = 50.0
    fids = []
    for ratio in (10, 100, 1000):
        binom = coherent_coefficients(build_basis(int(ratio * nbar)), nbar)
        pois = poisson_coefficients(nbar)
        fids.append(abs(pois.overlap(binom)) ** 2)
    assert fids[0] < fids[1] < fids[2] < 1.0 + 1e-12


def test_gaussian_weight_values():
    assert abs(gaussian_weight(100.0, 0) - 1.0 / math.sqrt(200.0 * math.pi)) < 1e-15
    assert abs(gaussian_weight(100.0, 0) - 0.03989) < 5e-6


def test_gaussian_weight_normalization():
    nbar = 100.0
    k = np.arange(-int(10 * math.sqrt(nbar)), int(10 * math.sqrt(nbar)) + 1)
    assert abs(np.sum(gaussian_weight(nbar, k)) - 1.0) < 1e-6


def test_gaussian_weight_vs_binomial_peak():
    nbar, N = 100.0, 10**5
    pmf = np.abs(coherent_coefficients(build_basis(N), nbar).amplitudes) ** 2
    peak = pmf[int(nbar)]
    assert abs(gaussian_weight(nbar, 0) - peak) / peak < 0.01


def test_states_are_write_locked():
    state = coherent_coefficients(build_basis(20), 10.0)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 1.0
    op = tunneling_op(build_basis(5))
    with pytest.raises(ValueError):
        op.entries[0, 0] = 1.0
