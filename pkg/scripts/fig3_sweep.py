"""Probe phase per signal photon and required probe energy versus group velocity.

Reproduces the slow-light trend: both pulses share v_g, phi scales as
(c/v_g)^2 and the number-state probe energy as (v_g/c)^2.

    python3 scripts/fig3_sweep.py [--out fig3.csv]
"""
import argparse
import csv
import math

import numpy as np
from scipy.constants import c

from pcwqnd.core import ALGAAS_1620, omega_from_wavelength
from pcwqnd.feasibility import PcwScenario, phase_ideal, probe_requirement

A = 420e-9
GAMMA_SP = 1.4e-2 / A**2


def sweep(n_points=25):
    w_s, w_p = omega_from_wavelength(1550e-9), omega_from_wavelength(1620e-9)
    rows = []
    for ratio in np.logspace(-3, -1, n_points):
        scen = PcwScenario(ALGAAS_1620, GAMMA_SP, ratio * c, ratio * c, 100e-6, 200e-12, w_s, w_p)
        phi = phase_ideal(scen)
        n_p, energy = probe_requirement(phi, omega_p=w_p)
        rows.append((ratio, phi, n_p, energy))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=None, help="optional CSV path")
    parser.add_argument("--points", type=int, default=25)
    args = parser.parse_args()
    rows = sweep(args.points)
    print(f"{'v_g/c':>10} {'phi [rad]':>12} {'N_p':>12} {'E_p [J]':>12}")
    for r in rows:
        print(f"{r[0]:10.4g} {r[1]:12.4e} {r[2]:12.4e} {r[3]:12.4e}")
    slope = np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0]
    print(f"log-log slope of phi: {slope:.4f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vg_over_c", "phi_per_photon_rad", "required_Np", "required_energy_J"])
            w.writerows(rows)
    assert all(math.isfinite(r[3]) for r in rows)


if __name__ == "__main__":
    main()
