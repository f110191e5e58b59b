"""Closed-form feasibility chain for a Kerr QND photon-number measurement.

Bulk phase per signal photon, slow-light/area enhancement, the ideal PCW
phase per photon, shot-noise-limited probe sizing and loss-limited lengths.
Pure functions throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import C, HBAR, CarrierSpec, MaterialParams, PulseSpec, StateKind
from .dispersion import DegenerateBandEdge


@dataclass(frozen=True)
class BulkScenario:
    material: MaterialParams
    wavelength_s: float  # m
    wavelength_p: float  # m
    tau_s: float  # s
    area: float  # m^2
    length: float  # m

    def __post_init__(self):
        for name in ("wavelength_s", "wavelength_p", "tau_s", "area", "length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class PcwScenario:
    material: MaterialParams
    gamma_sp: float  # 1/m^2
    v_s: float  # m/s
    v_p: float  # m/s
    length: float  # m
    tau_s: float  # s
    omega_s: float  # rad/s
    omega_p: float  # rad/s

    def __post_init__(self):
        if self.gamma_sp < 0:
            raise ValueError("gamma_sp must be >= 0")
        for name in ("v_s", "v_p"):
            v = getattr(self, name)
            if v == 0:
                raise DegenerateBandEdge(f"{name} = 0: band-edge degeneracy")
            if not 0 < v <= C:
                raise ValueError(f"{name} must lie in (0, c], got {v}")
        for name in ("length", "tau_s", "omega_s", "omega_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


def bulk_phase_per_photon(s: BulkScenario) -> float:
    """4 pi^2 c hbar n2 L / (lambda_s lambda_p tau_s A), rad per signal photon."""
    return (
        4.0 * math.pi**2 * C * HBAR * s.material.n2 * s.length
        / (s.wavelength_s * s.wavelength_p * s.tau_s * s.area)
    )


def enhancement(v_g: float, area_bulk: float, area_pcw: float) -> float:
    """(c/v_g)^2 * A_bulk / A_pcw."""
    if not v_g > 0:
        raise ValueError("v_g must be > 0")
    return (C / v_g) ** 2 * area_bulk / area_pcw


def phase_ideal(s: PcwScenario) -> float:
    """Phase per signal photon for a narrow probe with no walk-off, rad.

    c n2 gamma_sp hbar w_s w_p (L / v_p) / (v_s tau_s)
    """
    return (
        C * s.material.n2 * s.gamma_sp * HBAR * s.omega_s * s.omega_p
        * (s.length / s.v_p) / (s.v_s * s.tau_s)
    )


@dataclass(frozen=True)
class NoiseBreakdown:
    """Observed photon-number variance of the signal and its two contributions.

    ``intrinsic_info`` and ``measurement_info`` are the additive inverse
    variances (1/N_s and 4 phi^2 N_p); ``snr`` is 4 phi^2 N_p.
    """

    variance: float
    intrinsic_info: float
    measurement_info: float
    snr: float
    measurable: bool


def observed_variance(signal: PulseSpec, probe: PulseSpec, phi_s: float) -> NoiseBreakdown:
    n_s = signal.photon_number
    n_p = probe.photon_number
    meas = 4.0 * phi_s**2 * n_p
    if signal.state_kind is StateKind.NUMBER:
        intrinsic = 0.0
    else:
        intrinsic = 1.0 / n_s if n_s > 0 else math.inf
    if meas == 0.0:
        return NoiseBreakdown(math.inf, intrinsic, 0.0, 0.0, measurable=False)
    return NoiseBreakdown(
        variance=1.0 / (intrinsic + meas),
        intrinsic_info=intrinsic,
        measurement_info=meas,
        snr=meas,
        measurable=True,
    )


def probe_requirement(
    phi_s: float,
    n_s: float = 1.0,
    beta: float | None = None,
    omega_p: float | None = None,
    state_kind: StateKind | str = StateKind.NUMBER,
) -> tuple[float, float]:
    """Probe photons (and energy, if ``omega_p`` is given) for the target error.

    Number-state signal: SNR 1, i.e. ``4 phi^2 N_p = 1``; ``beta`` is ignored.
    Coherent signal with tolerated error ``beta * N_s``:
    ``N_p = 1 / (4 phi^2 beta N_s)``.
    """
    if phi_s == 0:
        return math.inf, math.inf
    kind = StateKind(state_kind)
    if kind is StateKind.COHERENT and beta is not None:
        if not 0 < beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {beta}")
        if not n_s > 0:
            raise ValueError("relaxed sizing needs N_s > 0")
        n_p = 1.0 / (4.0 * phi_s**2 * beta * n_s)
    else:
        n_p = 1.0 / (4.0 * phi_s**2)
    energy = n_p * HBAR * omega_p if omega_p is not None else math.nan
    return n_p, energy


@dataclass(frozen=True)
class LossLimits:
    linear_path: float  # m, 1/alpha1 (effective, slow-light-stretched path)
    linear_device_length: float  # m, linear_path * v_p / c
    tpa_length: float  # m, 1/(alpha2 I)


def loss_limits(material: MaterialParams, v_p: float, intensity: float) -> LossLimits:
    """Attenuation lengths; ``inf`` where the relevant coefficient vanishes."""
    linear = 1.0 / material.alpha1 if material.alpha1 > 0 else math.inf
    tpa_rate = material.alpha2 * intensity
    tpa = 1.0 / tpa_rate if tpa_rate > 0 else math.inf
    return LossLimits(
        linear_path=linear,
        linear_device_length=linear * abs(v_p) / C,
        tpa_length=tpa,
    )


def pulse_intensity(energy: float, duration: float, area: float) -> float:
    """Mean intensity E / (tau A) of a pulse, W/m^2."""
    return energy / (duration * area)


@dataclass(frozen=True)
class FeasibilityReport:
    phi_per_photon: float
    required_Np: float
    required_energy: float
    enhancement: float
    loss_limits: LossLimits
    noise: NoiseBreakdown
    inputs: dict = field(default_factory=dict)

    def as_rows(self) -> list[tuple[str, object]]:
        """Flat (key, value) pairs with unit-suffixed keys, in a fixed order."""
        rows: list[tuple[str, object]] = [
            ("phi_per_photon_rad", self.phi_per_photon),
            ("required_Np", self.required_Np),
            ("required_energy_J", self.required_energy),
            ("enhancement", self.enhancement),
            ("linear_path_limit_m", self.loss_limits.linear_path),
            ("linear_device_length_limit_m", self.loss_limits.linear_device_length),
            ("tpa_length_limit_m", self.loss_limits.tpa_length),
            ("noise_variance", self.noise.variance),
            ("noise_intrinsic_info", self.noise.intrinsic_info),
            ("noise_measurement_info", self.noise.measurement_info),
            ("snr", self.noise.snr),
        ]
        rows += [(f"input.{k}", v) for k, v in self.inputs.items()]
        return rows


def build_report(
    phi: float,
    signal: PulseSpec,
    probe_omega: float,
    *,
    beta: float | None = None,
    enhancement_factor: float = 1.0,
    material: MaterialParams,
    v_p: float,
    intensity: float | None = None,
    probe_tau: float | None = None,
    probe_area: float | None = None,
    inputs: dict | None = None,
) -> FeasibilityReport:
    """Size the probe for ``phi`` and attach loss limits and the noise budget.

    The TPA limit uses ``intensity`` when given, otherwise the mean intensity
    of the required probe pulse over ``probe_tau`` and ``probe_area``.
    """
    n_p, energy = probe_requirement(
        phi, signal.photon_number, beta, probe_omega, signal.state_kind
    )
    if intensity is None:
        if probe_tau is None or probe_area is None:
            raise ValueError("need an intensity or the probe duration and area")
        intensity = pulse_intensity(energy, probe_tau, probe_area)
    probe = PulseSpec(
        carrier=CarrierSpec(wavelength=2.0 * math.pi * C / probe_omega),
        tau=probe_tau or signal.tau,
        photon_number=n_p if math.isfinite(n_p) else 0.0,
    )
    return FeasibilityReport(
        phi_per_photon=phi,
        required_Np=n_p,
        required_energy=energy,
        enhancement=enhancement_factor,
        loss_limits=loss_limits(material, v_p, intensity),
        noise=observed_variance(signal, probe, phi),
        inputs=dict(inputs or {}),
    )
