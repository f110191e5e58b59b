"""Measurements behind the solver's invariants.

Each function builds a small scenario, runs the solver and returns the
number the property is judged on. The unit tests and the acceptance suite
both assert on these, with the acceptance tolerances.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.constants import c

import oracles
from pcwqnd.core import CarrierSpec, MaterialParams, PulseSpec, kappa
from pcwqnd.dispersion import DispersionPoint
from pcwqnd.propagation import (
    EnvelopeGrid,
    Gaussian,
    Propagator,
    Sampled,
    SolverConfig,
    coupling_coefficients,
    init_state,
    propagate,
    step,
)

LOSSLESS = MaterialParams(n=3.4, n2=1.5e-17)
A = 420e-9
GAMMA = np.array([[6.4e-2, 1.4e-2], [1.4e-2, 6.4e-2]]) / A**2


def pulse(wavelength, tau, n, kind="number"):
    return PulseSpec(CarrierSpec(wavelength), tau, n, kind)


def point(v, dvg_dk=0.0, wavelength=1550e-9):
    return DispersionPoint(k=0.0, omega=2 * math.pi * c / wavelength, v_g=v, dvg_dk=dvg_dk)


def norm_drift(n_steps=10_000, n_points=1024):
    """Largest relative change of either envelope norm over a lossless run.

    Walk-off, GVD and both nonlinear terms are all active.
    """
    grid = EnvelopeGrid(2e-3, n_points, "comoving")
    s, p = pulse(1550e-9, 20e-12, 1e6), pulse(1620e-9, 20e-12, 1e6)
    shapes = (Gaussian(60e-6, 200e-6), Gaussian(60e-6, -200e-6))
    state = init_state(s, p, shapes, grid)
    cfg = SolverConfig(include_gvd=True)
    coeffs = coupling_coefficients(
        state, cfg, point(c / 100, 0.5), point(c / 50, -0.3, 1620e-9), GAMMA, LOSSLESS
    )
    prop = Propagator(coeffs, grid, 1e-14)
    n0s, n0p = np.sum(np.abs(state.S) ** 2), np.sum(np.abs(state.P) ** 2)
    S, P = state.S, state.P
    for _ in range(n_steps):
        S, P = prop.step(S, P)
    return max(
        abs(np.sum(np.abs(S) ** 2) / n0s - 1.0),
        abs(np.sum(np.abs(P) ** 2) / n0p - 1.0),
    )


def advection_error(shift_cells=37.25, n_points=1024):
    """Max error of a linearly advected Gaussian against the shifted closed form."""
    grid = EnvelopeGrid(1e-3, n_points, "lab")
    length = 50e-6
    s = pulse(1550e-9, 1e-12, 1.0)
    state = init_state(s, s, (Gaussian(length, -100e-6), Gaussian(length, 0.0)), grid)
    v = c / 100
    t = shift_cells * grid.dz / v
    cfg = SolverConfig(dt=t, include_nonlinearity=False, include_tpa=False, include_linear_loss=False)
    out = step(state, cfg, point(v), point(0.0), GAMMA, LOSSLESS)
    shape0 = np.sqrt(Gaussian(length, -100e-6).intensity(grid.z))
    i = int(np.argmax(shape0))
    scale = abs(state.S[i]) / shape0[i]
    expected = np.sqrt(Gaussian(length, -100e-6 + v * t).intensity(grid.z))
    return float(np.max(np.abs(out.S / scale - expected)))


def xpm_spm_ratio():
    """Phase rate on a pulse from a copy of a flat profile, as 'other' over 'self'.

    Both carriers share a frequency and all overlaps are equal, so only the
    cross-modulation factor distinguishes the two runs.
    """
    grid = EnvelopeGrid(1e-3, 512, "comoving")
    z = grid.z
    flat = np.exp(-((z / 150e-6) ** 16))  # super-Gaussian plateau
    gamma = np.full((2, 2), 1.0 / (250e-9) ** 2)
    dt = 1e-13
    cfg = SolverConfig(dt=dt, include_tpa=False, include_linear_loss=False)
    big, tiny = pulse(1550e-9, 1e-12, 1e8), pulse(1550e-9, 1e-12, 1e-8)
    centre = grid.n_points // 2
    # flat pulse as the probe acting on a negligible signal
    other = init_state(tiny, big, (Sampled(flat), Sampled(flat)), grid)
    o = step(other, cfg, point(0.0), point(0.0), gamma, LOSSLESS)
    rate_other = np.angle(o.S[centre] / other.S[centre]) / dt
    # the same flat pulse acting on itself
    self_ = init_state(big, tiny, (Sampled(flat), Sampled(flat)), grid)
    s = step(self_, cfg, point(0.0), point(0.0), gamma, LOSSLESS)
    rate_self = np.angle(s.S[centre] / self_.S[centre]) / dt
    return rate_other / rate_self


def walkoff_state(n_s, grid_frame="comoving", n_points=4096, probe_length=5e-6):
    """Signal at c/100 crossing a narrow probe at c/50; 20 ps signal."""
    v_s, v_p = c / 100, c / 50
    tau = 20e-12
    dv = v_s - v_p
    duration = 40e-12
    start = -dv * duration / 2
    s, p = pulse(1550e-9, tau, n_s), pulse(1620e-9, tau, 1e6)
    shapes = (Gaussian(v_s * tau, start), Gaussian(probe_length, 0.0))
    reach = math.sqrt(math.log(1e6) / math.pi) * v_s * tau
    length = 2.2 * (abs(start) + reach + abs(dv) * duration)
    if grid_frame == "lab":
        length += 2 * v_p * duration
        shapes = (Gaussian(v_s * tau, start - v_p * duration / 2),
                  Gaussian(probe_length, -v_p * duration / 2))
    grid = EnvelopeGrid(length, n_points, grid_frame)
    return init_state(s, p, shapes, grid), point(v_s), point(v_p, 0.0, 1620e-9), duration


def phi_s_walkoff(n_s=1e6, n_steps=2000, frame="comoving"):
    state, ds, dp, duration = walkoff_state(n_s, frame)
    cfg = SolverConfig(n_steps=n_steps, include_tpa=False, include_linear_loss=False)
    _, report = propagate(state, cfg, ds, dp, GAMMA, LOSSLESS, duration=duration)
    return report


def linearity_error(n_s=1e6):
    """|phi_S(2 N_s) / (2 phi_S(N_s)) - 1|."""
    one = phi_s_walkoff(n_s, n_steps=1000).phi_S
    two = phi_s_walkoff(2 * n_s, n_steps=1000).phi_S
    return abs(two / (2 * one) - 1.0)


def strang_errors(steps=(10, 20, 40)):
    """Max error of the signal-induced probe phase field against the erf solution.

    The probe is wide and sits still in the comoving frame while the signal
    sweeps across it, so the exact phase at every z is a difference of error
    functions.
    """
    v_s, v_p = c / 100, c / 50
    dv = v_s - v_p
    tau = 20e-12
    length = v_s * tau
    duration = 30e-12
    start = 150e-6
    grid = EnvelopeGrid(2e-3, 1024, "comoving")
    s, p = pulse(1550e-9, tau, 1e6), pulse(1620e-9, tau, 1e6)
    shapes = (Gaussian(length, start), Gaussian(300e-6, 0.0))
    state = init_state(s, p, shapes, grid)
    # peak of the continuous profile (its centre is off-grid)
    i = int(np.argmax(np.abs(state.S)))
    s_peak2 = float(np.abs(state.S[i]) ** 2 / shapes[0].intensity(grid.z[i]))
    rate = kappa(LOSSLESS) * p.carrier.omega * GAMMA[0, 1] * s_peak2
    exact = oracles.walkoff_phase_erf(grid.z, rate, length, start, dv, duration)
    window = np.abs(grid.z) < 200e-6
    errors = []
    for n in steps:
        cfg = SolverConfig(n_steps=n, include_tpa=False, include_linear_loss=False)
        _, rep = propagate(
            state, cfg, point(v_s), point(v_p, 0.0, 1620e-9), GAMMA, LOSSLESS, duration=duration
        )
        errors.append(float(np.max(np.abs(rep.phase_field - exact)[window])))
    return errors


def gvd_error(n_points=2048):
    """Relative L2 error of a dispersed Gaussian against the complex-width law."""
    grid = EnvelopeGrid(4e-3, n_points, "lab")
    length = 100e-6
    s = pulse(1550e-9, 1e-12, 1.0)
    state = init_state(s, s, (Gaussian(length), Gaussian(length)), grid)
    sigma2 = length**2 / math.pi  # exp(-pi z^2/L^2) = exp(-z^2/sigma^2) in intensity
    dvg_dk = 2.0
    t = 3.0 * sigma2 / dvg_dk
    cfg = SolverConfig(
        dt=t, include_gvd=True, include_nonlinearity=False, include_tpa=False,
        include_linear_loss=False,
    )
    out = step(state, cfg, point(0.0, dvg_dk), point(0.0), GAMMA, LOSSLESS)
    peak = np.abs(state.S[grid.n_points // 2])
    expected = oracles.gvd_gaussian(grid.z, sigma2, dvg_dk, t)
    return float(np.linalg.norm(out.S / peak - expected) / np.linalg.norm(expected))
