"""Walk-off: solver phase on a narrow probe against the error-function closed form.

A 20 ps signal at c/100 crosses a narrow probe; the probe velocity is
varied. The integrated phase kappa*omega_p*gamma_sp*|S_peak|^2 * int
exp(-pi ((z0 - c0 - dv t)/L)^2) dt has a closed form in erf.

    python3 scripts/walkoff_demo.py
"""
import math
import time

import numpy as np
from scipy.constants import c, epsilon_0, hbar
from scipy.special import erf

from pcwqnd.core import CarrierSpec, MaterialParams, PulseSpec
from pcwqnd.dispersion import DispersionPoint
from pcwqnd.propagation import EnvelopeGrid, Gaussian, SolverConfig, init_state, propagate

MATERIAL = MaterialParams(n=3.4, n2=1.5e-17)
A = 420e-9
GAMMA = np.array([[6.4e-2, 1.4e-2], [1.4e-2, 6.4e-2]]) / A**2
N_S, TAU, DURATION = 1e6, 20e-12, 40e-12
LAM_S, LAM_P = 1550e-9, 1620e-9


def point(v, lam):
    return DispersionPoint(k=0.0, omega=2 * math.pi * c / lam, v_g=v, dvg_dk=0.0)


def closed_form(v_s, dv, start):
    length = v_s * TAU
    omega_s, omega_p = 2 * math.pi * c / LAM_S, 2 * math.pi * c / LAM_P
    s_peak2 = N_S * hbar * omega_s / (epsilon_0 * length)
    rate = c * epsilon_0 * MATERIAL.n2 * omega_p * GAMMA[0, 1] * s_peak2
    k = math.sqrt(math.pi) / length
    if dv == 0:
        return rate * DURATION * math.exp(-math.pi * (start / length) ** 2)
    return rate * math.sqrt(math.pi) * (erf(-k * start) - erf(-k * (start + dv * DURATION))) / (2 * k * dv)


def run(v_p, v_s=c / 100, n_points=4096):
    dv = v_s - v_p
    start = -dv * DURATION / 2
    reach = math.sqrt(math.log(1e6) / math.pi) * v_s * TAU
    grid = EnvelopeGrid(2.2 * (abs(start) + reach + abs(dv) * DURATION), n_points, "comoving")
    spec_s = PulseSpec(CarrierSpec(LAM_S), TAU, N_S, "number")
    spec_p = PulseSpec(CarrierSpec(LAM_P), TAU, 1e6, "number")
    state = init_state(spec_s, spec_p, (Gaussian(v_s * TAU, start), Gaussian(5e-6, 0.0)), grid)
    cfg = SolverConfig(n_steps=2000, include_tpa=False, include_linear_loss=False)
    _, rep = propagate(state, cfg, point(v_s, LAM_S), point(v_p, LAM_P), GAMMA, MATERIAL, duration=DURATION)
    return rep.phi_S, closed_form(v_s, dv, start)


def main():
    print(f"{'v_p/c':>8} {'phi_S solver':>14} {'phi_S exact':>14} {'rel err':>10} {'time':>7}")
    for ratio in (0.01, 0.0125, 0.015, 0.02, 0.03):
        t0 = time.perf_counter()
        num, exact = run(ratio * c)
        print(f"{ratio:8.4f} {num:14.6e} {exact:14.6e} {abs(num / exact - 1):10.2e} "
              f"{time.perf_counter() - t0:6.2f}s")


if __name__ == "__main__":
    main()
