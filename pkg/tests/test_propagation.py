import math

import numpy as np
import pytest
from scipy.constants import c, epsilon_0, hbar

import oracles
import properties as props
from pcwqnd.core import MaterialParams
from pcwqnd.feasibility import PcwScenario, loss_limits, phase_ideal
from pcwqnd.propagation import (
    EnvelopeGrid,
    Gaussian,
    NumericalBlowup,
    Sampled,
    SolverConfig,
    WalkOffError,
    coupling_coefficients,
    detector_signal,
    domain_length_for,
    gaussian_pair,
    init_state,
    local_intensity,
    propagate,
    read_snapshot,
    step,
    write_snapshot,
)
from properties import GAMMA, LOSSLESS, point, pulse

QUIET = dict(include_tpa=False, include_linear_loss=False)


def simple_state(n_s=1.0, n_p=1.0, frame="comoving", n_points=1024, length=2e-3):
    grid = EnvelopeGrid(length, n_points, frame)
    s, p = pulse(1550e-9, 20e-12, n_s), pulse(1620e-9, 20e-12, n_p)
    return init_state(s, p, (Gaussian(60e-6), Gaussian(60e-6)), grid)


# ---------------------------------------------------------------- setup


def test_grid_requires_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        EnvelopeGrid(1e-3, 1000)
    with pytest.raises(ValueError):
        EnvelopeGrid(1e-3, 8)
    with pytest.raises(ValueError):
        EnvelopeGrid(1e-3, 1024, "rotating")


def test_grid_is_centred():
    g = EnvelopeGrid(1.0, 16)
    assert g.z[8] == 0.0
    assert g.dz == 1.0 / 16


def test_init_normalizes_to_photon_energy():
    state = simple_state(n_s=3.0, n_p=0.0)
    assert state.energy_s() == pytest.approx(3.0 * hbar * state.spec_s.carrier.omega, rel=1e-13)
    assert state.energy_p() == 0.0


def test_gaussian_peak_matches_effective_length():
    state = simple_state(n_s=1.0)
    # L = 60 um, centred on a grid point
    peak = np.abs(state.S[state.grid.n_points // 2]) ** 2
    expected = hbar * state.spec_s.carrier.omega / (epsilon_0 * 60e-6)
    assert peak == pytest.approx(expected, rel=1e-12)


def test_pulse_must_fit_domain():
    grid = EnvelopeGrid(200e-6, 1024)
    s = pulse(1550e-9, 20e-12, 1.0)
    with pytest.raises(ValueError, match="does not fit"):
        init_state(s, s, (Gaussian(60e-6), Gaussian(10e-6)), grid)


def test_pulse_must_be_resolved():
    grid = EnvelopeGrid(2e-3, 64)
    s = pulse(1550e-9, 20e-12, 1.0)
    with pytest.raises(ValueError, match="grid points"):
        init_state(s, s, (Gaussian(60e-6), Gaussian(60e-6)), grid)


def test_sampled_profile_shape_checked():
    grid = EnvelopeGrid(2e-3, 64)
    s = pulse(1550e-9, 20e-12, 1.0)
    with pytest.raises(ValueError, match="shape"):
        init_state(s, s, (Sampled(np.ones(32)), Sampled(np.ones(32))), grid)


def test_domain_helper_fits_pulses():
    shapes = gaussian_pair(pulse(1550e-9, 20e-12, 1), pulse(1620e-9, 20e-12, 1), c / 100, c / 50, None)
    length = domain_length_for(shapes, excursion=100e-6)
    init_state(pulse(1550e-9, 20e-12, 1), pulse(1620e-9, 20e-12, 1), shapes, EnvelopeGrid(length, 4096))


# ---------------------------------------------------------------- operators


def test_xpm_coefficient_is_twice_spm():
    state = simple_state()
    gamma = np.full((2, 2), 1e13)
    coeffs = coupling_coefficients(state, SolverConfig(), point(1e6), point(1e6), gamma, LOSSLESS)
    w_s, w_p = state.spec_s.carrier.omega, state.spec_p.carrier.omega
    assert coeffs.phase_sp == 2 * coeffs.phase_ss
    assert coeffs.phase_ps == 2 * coeffs.phase_pp
    assert coeffs.phase_ss == pytest.approx(0.5 * c * epsilon_0 * LOSSLESS.n2 * w_s * 1e13)
    assert coeffs.phase_pp / coeffs.phase_ss == pytest.approx(w_p / w_s)


def test_comoving_frame_subtracts_probe_velocity():
    state = simple_state()
    co = coupling_coefficients(state, SolverConfig(), point(c / 100), point(c / 50), GAMMA, LOSSLESS)
    assert co.v_p == 0.0
    assert co.v_s == pytest.approx(c / 100 - c / 50)


def test_xpm_phase_rate_is_twice_spm_behaviourally():
    assert props.xpm_spm_ratio() == pytest.approx(2.0, rel=1e-12)


def test_pure_advection_is_exact():
    assert props.advection_error() < 1e-12


def test_gvd_matches_complex_width_law():
    assert props.gvd_error() < 1e-6


def test_norm_conserved_without_loss():
    assert props.norm_drift(n_steps=2000) < 1e-9


def test_linear_loss_decays_at_c_alpha():
    material = MaterialParams(n=3.4, n2=1.5e-17, alpha1=10.0)
    state = simple_state(n_s=1.0, n_p=1.0)
    t = 1e-11
    cfg = SolverConfig(dt=t, include_nonlinearity=False)
    out = step(state, cfg, point(0.0), point(0.0), GAMMA, material)
    assert out.energy_s() / state.energy_s() == pytest.approx(math.exp(-c * 10.0 * t), rel=1e-12)


def test_tpa_decay_length_matches_loss_limit():
    material = MaterialParams(n=3.4, n2=1.5e-17, alpha2=2e-12)
    grid = EnvelopeGrid(2e-3, 1024)
    s, p = pulse(1500e-9, 20e-12, 0.0), pulse(1500e-9, 20e-12, 1e7)
    state = init_state(s, p, (Gaussian(60e-6), Gaussian(60e-6)), grid)
    intensity = local_intensity(state.P, GAMMA[1, 1], material)
    weights = np.abs(state.P) ** 2
    mean_i = float(np.sum(intensity * weights) / np.sum(weights))
    expected = loss_limits(material, c / 100, mean_i).tpa_length
    # short run: at most ~1% depletion keeps the decay exponential
    t = 0.01 * expected / c
    cfg = SolverConfig(n_steps=200, **{"include_linear_loss": False})
    final, _ = propagate(state, cfg, point(c / 100), point(c / 100), GAMMA, material, duration=t)
    measured = c * t / -math.log(final.energy_p() / state.energy_p())
    assert measured == pytest.approx(expected, rel=0.01)


# ---------------------------------------------------------------- phase attribution


def test_narrow_probe_reproduces_phase_ideal():
    v = c / 100
    tau = 200e-12
    grid = EnvelopeGrid(3e-3, 4096)
    s, p = pulse(1550e-9, tau, 1000.0), pulse(1620e-9, tau, 1e6)
    state = init_state(s, p, (Gaussian(v * tau), Gaussian(10e-6)), grid)
    _, rep = propagate(state, SolverConfig(**QUIET), point(v), point(v, 0.0, 1620e-9), GAMMA, LOSSLESS,
                       length=100e-6)
    assert rep.n_steps >= 1000
    scen = PcwScenario(LOSSLESS, GAMMA[0, 1], v, v, 100e-6, tau, s.carrier.omega, p.carrier.omega)
    assert rep.phi_per_photon == pytest.approx(phase_ideal(scen), rel=1e-3)


def test_walkoff_phase_matches_quadrature():
    rep = props.phi_s_walkoff(n_s=1e6, n_steps=1000)
    state, ds, dp, duration = props.walkoff_state(1e6)
    expected = oracles.walkoff_phase_quad(
        LOSSLESS.n2, GAMMA[0, 1], 1e6, state.spec_s.carrier.omega, state.spec_p.carrier.omega,
        ds.v_g, state.spec_s.tau, ds.v_g - dp.v_g, 0.0, -(ds.v_g - dp.v_g) * duration / 2, duration,
    )
    assert rep.phi_S == pytest.approx(expected, rel=1e-3)


def test_phi_s_linear_in_signal_photons():
    assert props.linearity_error() < 1e-6


def test_strang_second_order():
    e = props.strang_errors()
    assert e[0] / e[1] >= 3.5
    assert e[1] / e[2] >= 3.5


def test_lab_and_comoving_frames_agree():
    lab = props.phi_s_walkoff(frame="lab", n_steps=1000).phi_S
    co = props.phi_s_walkoff(frame="comoving", n_steps=1000).phi_S
    assert lab == pytest.approx(co, rel=1e-5)


def test_zero_duration_gives_zero_phase():
    state = simple_state(n_s=1e6, n_p=1e6)
    _, rep = propagate(state, SolverConfig(), point(c / 100), point(c / 100), GAMMA, LOSSLESS, duration=0.0)
    assert rep.phi_S == 0.0 and rep.n_steps == 0


def test_no_signal_gives_zero_phase():
    state = simple_state(n_s=0.0, n_p=1e6)
    _, rep = propagate(state, SolverConfig(n_steps=10), point(c / 100), point(c / 100), GAMMA,
                       LOSSLESS, duration=1e-12)
    assert rep.phi_S == 0.0 and rep.phi_per_photon == 0.0


def test_walkoff_past_domain_is_reported():
    state = simple_state(frame="lab")
    with pytest.raises(WalkOffError, match="enlarge the grid"):
        propagate(state, SolverConfig(n_steps=10), point(c / 100), point(c / 100), GAMMA, LOSSLESS,
                  duration=1e-9)


def test_non_finite_envelope_aborts():
    state = simple_state(n_s=1.0)
    S = state.S.copy()
    S[3] = np.nan
    from dataclasses import replace

    with pytest.raises(NumericalBlowup):
        step(replace(state, S=S), SolverConfig(dt=1e-15), point(0.0), point(0.0), GAMMA, LOSSLESS)


def test_explicit_dt_above_phase_budget_rejected():
    state = simple_state(n_s=1e12, n_p=1e12)
    with pytest.raises(ValueError, match="per step"):
        propagate(state, SolverConfig(dt=1e-11), point(c / 100), point(c / 100), GAMMA, LOSSLESS,
                  duration=1e-10)


def test_runs_are_deterministic():
    a = props.phi_s_walkoff(n_steps=200)
    b = props.phi_s_walkoff(n_steps=200)
    assert a.phi_S == b.phi_S
    assert np.array_equal(a.phase_field, b.phase_field)


# ---------------------------------------------------------------- detector


def test_detector_signal_uniform_phase():
    state = simple_state(n_p=5e6)
    phi0 = 3e-4
    got = detector_signal(state, np.full(state.grid.n_points, phi0))
    assert got == pytest.approx(5e6 * hbar * state.spec_p.carrier.omega * phi0, rel=1e-12)


def test_detector_signal_zero_probe():
    state = simple_state(n_p=0.0)
    assert detector_signal(state, np.ones(state.grid.n_points)) == 0.0


def test_detector_signal_shape_mismatch():
    state = simple_state()
    with pytest.raises(ValueError):
        detector_signal(state, np.ones(3))


def test_detector_signal_narrow_probe_closed_form():
    # I_det = kappa w_p gamma (L/v_p) N_s N_p hbar w_p hbar w_s / (eps0 tau_s v_s)
    v, tau = c / 100, 200e-12
    grid = EnvelopeGrid(3e-3, 4096)
    s, p = pulse(1550e-9, tau, 1000.0), pulse(1620e-9, tau, 1e6)
    state = init_state(s, p, (Gaussian(v * tau), Gaussian(10e-6)), grid)
    _, rep = propagate(state, SolverConfig(**QUIET), point(v), point(v, 0.0, 1620e-9), GAMMA, LOSSLESS,
                       length=100e-6)
    w_s, w_p = s.carrier.omega, p.carrier.omega
    closed = (c * LOSSLESS.n2 * hbar**2 * w_p**2 * w_s * GAMMA[0, 1] * (100e-6 / v)
              * 1000.0 * 1e6 / (tau * v))
    assert rep.I_det == pytest.approx(closed, rel=1e-3)


# ---------------------------------------------------------------- snapshots


def test_snapshot_round_trip(tmp_path):
    state = simple_state(n_s=2.0, n_p=3.0)
    path = tmp_path / "snap.csv"
    write_snapshot(path, state)
    assert path.read_text().splitlines()[1].startswith("z_m,re_S_V")
    cols = read_snapshot(path)
    assert np.array_equal(cols["z_m"], state.grid.z)
    assert np.array_equal(cols["re_P_V"] + 1j * cols["im_P_V"], state.P)
