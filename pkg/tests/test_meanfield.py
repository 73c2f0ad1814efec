import math

import numpy as np
import pytest

from cpbox.meanfield import (
    NoOscillationError,
    NormDriftError,
    OrderParameter,
    PhasePoint,
    canonical_residual,
    extract_frequency,
    flow_energy,
    gp_evolve,
    gp_fixed_point,
    gp_rhs,
    hamiltonian_function,
    measure_small_oscillation,
    order_parameter_at,
    params_centered_at_nbar,
)
from cpbox.model import ModelParams, omega_c


def gp_params(E_C=1.0, EJ_over_EC=0.1, N=1000, nbar=100.0):
    e_j = EJ_over_EC * E_C
    k = e_j / math.sqrt(nbar * (N - nbar))
    return ModelParams(E_C=E_C, K=k, N=N, nbar=nbar, n_g=0.5)


def test_order_parameter_norm_enforced():
    with pytest.raises(ValueError):
        OrderParameter(psi_L=1.0 + 0j, psi_R=1.0 + 0j)
    st = order_parameter_at(25.0, 0.3, 100)
    assert st.occupation(100) == pytest.approx(25.0)
    assert st.phase_difference() == pytest.approx(0.3)


def test_gp_rhs_trivial_cases():
    p = ModelParams(E_C=0.0 + 1e-300, K=0.0, N=10, nbar=5.0, n_g=0.0)
    st = order_parameter_at(5.0, 0.0, 10)
    dl, dr = gp_rhs(st, p)
    assert abs(dl) < 1e-12 and abs(dr) < 1e-12


def test_gp_rhs_pure_tunneling_feed():
    # psi_L = 0: d psi_L/dt = i K psi_R
    p = ModelParams(E_C=1.0, K=0.7, N=10, nbar=5.0, n_g=0.5)
    st = OrderParameter(psi_L=0.0 + 0j, psi_R=1.0 + 0j)
    dl, _ = gp_rhs(st, p)
    assert dl == pytest.approx(1j * 0.7)


def test_gp_rhs_norm_derivative_vanishes():
    rng = np.random.default_rng(2)
    p = ModelParams(E_C=1.2, K=0.3, N=50, nbar=20.0, n_g=0.5, U_L=0.4, U_R=1.1)
    for _ in range(20):
        v = rng.standard_normal(4)
        pl = complex(v[0], v[1])
        pr = complex(v[2], v[3])
        scale = math.sqrt(abs(pl) ** 2 + abs(pr) ** 2)
        st = OrderParameter(psi_L=pl / scale, psi_R=pr / scale)
        dl, dr = gp_rhs(st, p)
        norm_dot = (st.psi_L.conjugate() * dl + st.psi_R.conjugate() * dr).real
        assert abs(norm_dot) < 1e-14


def test_hamiltonian_function_extremes():
    p = gp_params()
    m = p.nbar + p.n_g
    assert hamiltonian_function(PhasePoint(0.0, m), p) == pytest.approx(-p.E_J)
    assert hamiltonian_function(PhasePoint(math.pi, m), p) == pytest.approx(p.E_J)
    p0 = ModelParams(E_C=2.0, K=0.0, N=10, nbar=5.0, n_g=0.0)
    assert hamiltonian_function(PhasePoint(0.7, 6.0), p0) == pytest.approx(2.0 * 1.0)


def test_fixed_point_is_stationary():
    p = params_centered_at_nbar(gp_params())
    fp = gp_fixed_point(p)
    assert fp.n_L == pytest.approx(p.nbar, abs=1e-9)
    state0 = order_parameter_at(fp.n_L, 0.0, p.N)
    period = 2 * math.pi / omega_c(p)
    traj = gp_evolve(state0, p, t_final=100 * period, dt=period / 400, record_every=100)
    assert np.max(np.abs(traj.n_L - fp.n_L)) < 1e-8


def test_energy_and_norm_conservation_100_periods():
    p = params_centered_at_nbar(gp_params())
    disp = 0.01 * math.sqrt(p.E_J / (2 * p.E_C))
    state0 = order_parameter_at(p.nbar + disp, 0.0, p.N)
    period = 2 * math.pi / omega_c(p)
    traj = gp_evolve(state0, p, t_final=100 * period, dt=period / 400, record_every=10)
    assert np.max(np.abs(traj.norm - 1.0)) < 1e-8
    e0 = traj.energy[0]
    assert np.max(np.abs(traj.energy - e0)) / abs(e0) < 1e-8
    assert flow_energy(state0, p) == pytest.approx(e0, rel=1e-12)


def test_small_oscillation_frequency_matches_omega_c():
    p = gp_params()
    meas = measure_small_oscillation(params_centered_at_nbar(p))
    assert abs(meas["relative_deviation"]) < 0.01
    # zero-crossing and spectral estimates agree to the spectral resolution
    assert meas["omega_spectral"] == pytest.approx(meas["omega"], rel=0.05)


def test_frequency_converges_from_below_with_amplitude():
    # pendulum softening: larger amplitude, lower frequency
    p = params_centered_at_nbar(gp_params())
    scale = math.sqrt(p.E_J / (2 * p.E_C))
    omegas = []
    for frac in (1.0, 0.5, 0.25):
        meas = measure_small_oscillation(
            p, displacement=frac * scale, periods=60, steps_per_period=800
        )
        omegas.append(meas["omega"])
    w_c = omega_c(p)
    assert omegas[0] < omegas[1] < omegas[2] <= w_c * (1 + 1e-6)


def test_frequency_scales_with_sqrt_EC():
    # doubling E_C at fixed E_J raises the frequency by sqrt(2)
    p1 = params_centered_at_nbar(gp_params(E_C=1.0, EJ_over_EC=0.1))
    p2 = params_centered_at_nbar(gp_params(E_C=2.0, EJ_over_EC=0.05))
    assert p1.E_J == pytest.approx(p2.E_J)
    w1 = measure_small_oscillation(p1)["omega"]
    w2 = measure_small_oscillation(p2)["omega"]
    assert w2 / w1 == pytest.approx(math.sqrt(2.0), rel=0.01)


def test_zero_tunneling_constant_occupation():
    p = ModelParams(E_C=1.0, K=0.0, N=100, nbar=25.0, n_g=0.5, U_R=3.0)
    state0 = order_parameter_at(25.0, 0.9, 100)
    traj = gp_evolve(state0, p, t_final=5.0, dt=5e-4, record_every=100)
    assert np.max(np.abs(traj.n_L - 25.0)) < 1e-9


def test_canonical_residual_small():
    p = params_centered_at_nbar(gp_params())
    disp = 0.5 * math.sqrt(p.E_J / (2 * p.E_C))
    state0 = order_parameter_at(p.nbar + disp, 0.0, p.N)
    period = 2 * math.pi / omega_c(p)
    traj = gp_evolve(state0, p, t_final=20 * period, dt=period / 400, record_every=10)
    assert canonical_residual(traj, p) < 1e-6


def test_extract_frequency_flat_signal_raises():
    p = params_centered_at_nbar(gp_params())
    fp = gp_fixed_point(p)
    state0 = order_parameter_at(fp.n_L, 0.0, p.N)
    period = 2 * math.pi / omega_c(p)
    traj = gp_evolve(state0, p, t_final=30 * period, dt=period / 200, record_every=20)
    with pytest.raises(NoOscillationError):
        extract_frequency(traj)


def test_norm_drift_abort_on_coarse_step():
    # deliberately huge step without the gauge shift: the integrator must
    # abort with a diagnostic instead of returning garbage
    p = ModelParams(E_C=1.0, K=0.001, N=1000, nbar=100.0, n_g=0.5, U_R=100.0)
    state0 = order_parameter_at(100.0, 0.0, 1000)
    with pytest.raises(NormDriftError):
        gp_evolve(state0, p, t_final=200.0, dt=0.5, record_every=10, energy_ref=0.0)


def test_norm_error_at_least_fourth_order():
    # halving dt must cut the norm drift by >= 2^4 (measured ~2^5: the
    # leading truncation term is nearly norm-preserving here)
    p = params_centered_at_nbar(gp_params())
    disp = 0.01 * math.sqrt(p.E_J / (2 * p.E_C))
    state0 = order_parameter_at(p.nbar + disp, 0.0, p.N)
    period = 2 * math.pi / omega_c(p)
    drifts = []
    for steps in (25, 50, 100):
        traj = gp_evolve(state0, p, t_final=10 * period, dt=period / steps, record_every=10**6)
        drifts.append(np.max(np.abs(traj.norm - 1.0)))
    assert 12.0 < drifts[0] / drifts[1] < 40.0
    assert 12.0 < drifts[1] / drifts[2] < 40.0
