"""Coupled slowly-varying-envelope propagation of a signal S and a probe P.

Each envelope obeys

    dS/dt = i/2 kappa w_s (g_ss |S|^2 + 2 g_sp |P|^2) S - v_s S' + i/2 v_s' S''
            - 1/2 (loss rate) S

and symmetrically for P. Integration is Strang split: a half step of the
pointwise nonlinear phase/loss operator, a full step of advection + GVD applied
exactly in Fourier space on a periodic grid, another nonlinear half step.

Envelope units are volts with ``integral eps0 |S|^2 dz = N_s hbar w_s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np

from .core import C, EPSILON_0, MaterialParams, PulseSpec, kappa
from .dispersion import DispersionPoint
from .modes import OverlapTable

# envelopes must fall below this fraction of their peak at the domain edge
EDGE_FRACTION = 1e-6
MIN_POINTS_PER_FWHM = 8
DEFAULT_POINTS = 2**12


class PropagationError(RuntimeError):
    pass


class WalkOffError(PropagationError):
    pass


class NumericalBlowup(PropagationError):
    pass


@dataclass(frozen=True)
class EnvelopeGrid:
    """Periodic 1-D grid centred on z = 0.

    In the ``comoving`` frame z is measured from a point travelling with the
    probe group velocity.
    """

    length: float
    n_points: int = DEFAULT_POINTS
    frame: Literal["lab", "comoving"] = "comoving"

    def __post_init__(self):
        n = self.n_points
        if n < 16 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 16, got {n}")
        if not self.length > 0:
            raise ValueError("grid length must be > 0")
        if self.frame not in ("lab", "comoving"):
            raise ValueError(f"unknown frame {self.frame!r}")

    @property
    def dz(self) -> float:
        return self.length / self.n_points

    @property
    def z(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.dz

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dz)


@dataclass(frozen=True)
class Gaussian:
    """Gaussian envelope with ``|F|^2 ~ exp(-pi ((z - center)/length)^2)``.

    ``length`` is the effective length: the integral of the peak-normalized
    intensity, so ``length = v_g * tau`` reproduces the usual L_eff.
    """

    length: float
    center: float = 0.0

    @classmethod
    def for_pulse(cls, spec: PulseSpec, v_g: float, center: float = 0.0) -> "Gaussian":
        return cls(length=abs(v_g) * spec.tau, center=center)

    def intensity(self, z: np.ndarray) -> np.ndarray:
        return np.exp(-np.pi * ((z - self.center) / self.length) ** 2)

    @property
    def fwhm(self) -> float:
        return 2.0 * self.length * math.sqrt(math.log(2.0) / math.pi)


@dataclass(frozen=True)
class Sampled:
    """User-supplied complex profile on the grid (rescaled to the photon number)."""

    profile: np.ndarray


Shape = Gaussian | Sampled


@dataclass(frozen=True)
class PulseState:
    grid: EnvelopeGrid
    S: np.ndarray
    P: np.ndarray
    spec_s: PulseSpec
    spec_p: PulseSpec
    band_s: int = 0
    band_p: int = 0
    t: float = 0.0

    def energy_s(self) -> float:
        return EPSILON_0 * float(np.sum(np.abs(self.S) ** 2)) * self.grid.dz

    def energy_p(self) -> float:
        return EPSILON_0 * float(np.sum(np.abs(self.P) ** 2)) * self.grid.dz


def _profile(shape: Shape, grid: EnvelopeGrid, which: str) -> np.ndarray:
    if isinstance(shape, Gaussian):
        if shape.fwhm < MIN_POINTS_PER_FWHM * grid.dz:
            raise ValueError(
                f"{which} FWHM {shape.fwhm:.3g} m is under {MIN_POINTS_PER_FWHM} grid points "
                f"(dz = {grid.dz:.3g} m)"
            )
        amp = np.sqrt(shape.intensity(grid.z)).astype(complex)
    else:
        amp = np.asarray(shape.profile, dtype=complex)
        if amp.shape != (grid.n_points,):
            raise ValueError(f"{which} profile has shape {amp.shape}, grid has {grid.n_points}")
    inten = np.abs(amp) ** 2
    peak = inten.max()
    if peak <= 0:
        raise ValueError(f"{which} profile is identically zero")
    if max(inten[0], inten[-1]) > EDGE_FRACTION * peak:
        raise ValueError(f"{which} pulse does not fit in the domain (edge above 1e-6 of peak)")
    return amp


def init_state(
    spec_s: PulseSpec,
    spec_p: PulseSpec,
    shapes: tuple[Shape, Shape],
    grid: EnvelopeGrid,
    band_s: int = 0,
    band_p: int = 0,
) -> PulseState:
    """Sample both envelopes and scale them so sum(eps0 |F|^2) dz = N hbar w."""
    fields = []
    for spec, shape, which in ((spec_s, shapes[0], "signal"), (spec_p, shapes[1], "probe")):
        amp = _profile(shape, grid, which)
        if spec.photon_number == 0:
            fields.append(np.zeros(grid.n_points, dtype=complex))
            continue
        norm = EPSILON_0 * math.fsum((np.abs(amp) ** 2).tolist()) * grid.dz
        fields.append(amp * math.sqrt(spec.energy / norm))
    return PulseState(grid, fields[0], fields[1], spec_s, spec_p, band_s, band_p, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping controls.

    Give either ``dt`` or ``n_steps`` (per propagation); with neither, the
    step count is chosen so the nonlinear phase per step stays below
    ``max_phase_per_step`` and at least ``min_steps`` are taken.
    """

    dt: float | None = None
    n_steps: int | None = None
    min_steps: int = 1000
    max_phase_per_step: float = 0.05
    include_gvd: bool = False
    include_tpa: bool = True
    include_linear_loss: bool = True
    include_nonlinearity: bool = True
    snapshot_every: int = 0

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.n_steps is not None and self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")

    def linear_reference(self) -> "SolverConfig":
        return replace(
            self, include_tpa=False, include_linear_loss=False, include_nonlinearity=False
        )


def _gamma_pair(gamma: OverlapTable | np.ndarray, band_s: int, band_p: int):
    if isinstance(gamma, OverlapTable):
        return (
            gamma.gamma_between(band_s, band_s),
            gamma.gamma_between(band_s, band_p),
            gamma.gamma_between(band_p, band_p),
        )
    g = np.asarray(gamma, dtype=float)
    return float(g[0, 0]), float(g[0, 1]), float(g[1, 1])


@dataclass
class _Coefficients:
    """Scalar coefficients of the coupled equations, derived once per run."""

    phase_ss: float  # rad/s per V^2 on S from |S|^2
    phase_sp: float  # on S from |P|^2 (carries the XPM factor 2)
    phase_pp: float
    phase_ps: float
    loss_s: float  # 1/s, power attenuation
    loss_p: float
    tpa_ss: float  # 1/s per V^2, power attenuation of S from |S|^2
    tpa_sp: float
    tpa_pp: float
    tpa_ps: float
    v_s: float  # frame velocities
    v_p: float
    gvd_s: float
    gvd_p: float


def coupling_coefficients(
    state: PulseState,
    config: SolverConfig,
    dispersion_s: DispersionPoint,
    dispersion_p: DispersionPoint,
    gamma: OverlapTable | np.ndarray,
    material: MaterialParams,
) -> _Coefficients:
    g_ss, g_sp, g_pp = _gamma_pair(gamma, state.band_s, state.band_p)
    w_s, w_p = state.spec_s.carrier.omega, state.spec_p.carrier.omega
    vs_lab, vp_lab = dispersion_s.v_g, dispersion_p.v_g
    if config.include_nonlinearity:
        kap = kappa(material)
        half_s, half_p = 0.5 * kap * w_s, 0.5 * kap * w_p
    else:
        half_s = half_p = 0.0
    # Attenuation coefficients are per unit optical path. A pulse covers an
    # effective path c*t in time t (slow light stretches the path by c/v_g),
    # so spatial alpha maps to the temporal power-decay rate c*alpha.
    loss_s = loss_p = C * material.alpha1 if config.include_linear_loss else 0.0
    if config.include_tpa and material.alpha2 > 0:
        # local intensity 1/2 c eps0 n gamma |F|^2; the envelope normalization
        # already carries the slow-light field enhancement
        pref = C * material.alpha2 * 0.5 * C * EPSILON_0 * material.n
        tpa_ss = pref * g_ss
        tpa_sp = pref * 2.0 * g_sp
        tpa_pp = pref * g_pp
        tpa_ps = pref * 2.0 * g_sp
    else:
        tpa_ss = tpa_sp = tpa_pp = tpa_ps = 0.0
    shift = vp_lab if state.grid.frame == "comoving" else 0.0
    gvd_on = config.include_gvd
    return _Coefficients(
        phase_ss=half_s * g_ss,
        phase_sp=half_s * 2.0 * g_sp,
        phase_pp=half_p * g_pp,
        phase_ps=half_p * 2.0 * g_sp,
        loss_s=loss_s,
        loss_p=loss_p,
        tpa_ss=tpa_ss,
        tpa_sp=tpa_sp,
        tpa_pp=tpa_pp,
        tpa_ps=tpa_ps,
        v_s=vs_lab - shift,
        v_p=vp_lab - shift,
        gvd_s=dispersion_s.dvg_dk if gvd_on else 0.0,
        gvd_p=dispersion_p.dvg_dk if gvd_on else 0.0,
    )


def local_intensity(field_v: np.ndarray, gamma_self: float, material: MaterialParams) -> np.ndarray:
    """Local intensity 1/2 c eps0 n gamma |F|^2 seen by two-photon absorption, W/m^2."""
    return 0.5 * C * EPSILON_0 * material.n * gamma_self * np.abs(field_v) ** 2


def _decay_integral(rate: np.ndarray | float, h: float):
    """integral_0^h exp(-rate t) dt, stable as rate -> 0."""
    rate = np.asarray(rate, dtype=float)
    x = rate * h
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 1e-12, -np.expm1(-x) / np.where(rate > 0, rate, 1.0), h)
    return out


class Propagator:
    """Precomputed split-step operators for a fixed time step."""

    def __init__(self, coeffs: _Coefficients, grid: EnvelopeGrid, dt: float):
        self.c = coeffs
        self.grid = grid
        self.dt = dt
        q = grid.wavenumbers
        self._lin_s = self._linear(q, coeffs.v_s, coeffs.gvd_s, dt)
        self._lin_p = self._linear(q, coeffs.v_p, coeffs.gvd_p, dt)
        self._has_loss = any(
            (coeffs.loss_s, coeffs.loss_p, coeffs.tpa_ss, coeffs.tpa_sp, coeffs.tpa_pp, coeffs.tpa_ps)
        )
        self._has_tpa = any((coeffs.tpa_ss, coeffs.tpa_sp, coeffs.tpa_pp, coeffs.tpa_ps))

    @staticmethod
    def _linear(q, v, gvd, dt):
        if v == 0.0 and gvd == 0.0:
            return None
        return np.exp(-1j * (v * q + 0.5 * gvd * q**2) * dt)

    def _rates(self, Is, Ip):
        c = self.c
        rs = c.loss_s + c.tpa_ss * Is + c.tpa_sp * Ip
        rp = c.loss_p + c.tpa_pp * Ip + c.tpa_ps * Is
        return rs, rp

    def nonlinear(self, S, P, h):
        """Exact pointwise exponential of the local operator over time h.

        Without TPA the intensities decay as pure exponentials, so the phase
        integral is exact. With TPA the loss rates are frozen at a midpoint
        estimate of the intensities, keeping the sub-step second order.
        """
        c = self.c
        Is = np.abs(S) ** 2
        Ip = np.abs(P) ** 2
        if not self._has_loss:
            phase_s = (c.phase_ss * Is + c.phase_sp * Ip) * h
            phase_p = (c.phase_pp * Ip + c.phase_ps * Is) * h
            return S * np.exp(1j * phase_s), P * np.exp(1j * phase_p)
        rs, rp = self._rates(Is, Ip)
        if self._has_tpa:
            rs, rp = self._rates(Is * np.exp(-0.5 * rs * h), Ip * np.exp(-0.5 * rp * h))
        eff_s = Is * _decay_integral(rs, h)
        eff_p = Ip * _decay_integral(rp, h)
        phase_s = c.phase_ss * eff_s + c.phase_sp * eff_p
        phase_p = c.phase_pp * eff_p + c.phase_ps * eff_s
        S = S * np.exp(1j * phase_s - 0.5 * rs * h)
        P = P * np.exp(1j * phase_p - 0.5 * rp * h)
        return S, P

    def linear(self, S, P):
        if self._lin_s is not None and np.any(S):
            S = np.fft.ifft(np.fft.fft(S) * self._lin_s)
        if self._lin_p is not None and np.any(P):
            P = np.fft.ifft(np.fft.fft(P) * self._lin_p)
        return S, P

    def step(self, S, P):
        S, P = self.nonlinear(S, P, 0.5 * self.dt)
        S, P = self.linear(S, P)
        S, P = self.nonlinear(S, P, 0.5 * self.dt)
        return S, P


def peak_phase_rate(coeffs: _Coefficients, state: PulseState) -> float:
    Is = float(np.max(np.abs(state.S) ** 2))
    Ip = float(np.max(np.abs(state.P) ** 2))
    return max(
        abs(coeffs.phase_ss) * Is + abs(coeffs.phase_sp) * Ip,
        abs(coeffs.phase_pp) * Ip + abs(coeffs.phase_ps) * Is,
    )


def step(
    state: PulseState,
    config: SolverConfig,
    dispersion_s: DispersionPoint,
    dispersion_p: DispersionPoint,
    gamma: OverlapTable | np.ndarray,
    material: MaterialParams,
) -> PulseState:
    """Advance ``state`` by one Strang step of length ``config.dt``."""
    if config.dt is None:
        raise ValueError("step() needs an explicit config.dt")
    coeffs = coupling_coefficients(state, config, dispersion_s, dispersion_p, gamma, material)
    S, P = Propagator(coeffs, state.grid, config.dt).step(state.S, state.P)
    _check_finite(S, P, state.t + config.dt, 1)
    return replace(state, S=S, P=P, t=state.t + config.dt)


def _check_finite(S, P, t, n):
    if not (np.isfinite(S).all() and np.isfinite(P).all()):
        raise NumericalBlowup(f"non-finite envelope after step {n} (t = {t:.6g} s)")


def _support_halfwidth(field_v: np.ndarray, grid: EnvelopeGrid, center: float) -> float:
    inten = np.abs(field_v) ** 2
    peak = inten.max()
    if peak == 0:
        return 0.0
    above = inten >= EDGE_FRACTION * peak
    return float(np.max(np.abs(grid.z[above] - center))) + grid.dz


def centroid(field_v: np.ndarray, grid: EnvelopeGrid) -> float:
    """Intensity centroid, computed as a circular mean on the periodic domain."""
    w = np.abs(field_v) ** 2
    if not w.any():
        return 0.0
    theta = 2.0 * np.pi * grid.z / grid.length
    ang = np.angle(np.sum(w * np.exp(1j * theta)))
    return float(ang * grid.length / (2.0 * np.pi))


def _check_walkoff(state: PulseState, coeffs: _Coefficients, duration: float) -> None:
    grid = state.grid
    half = 0.5 * grid.length
    for name, fld, v in (("signal", state.S, coeffs.v_s), ("probe", state.P, coeffs.v_p)):
        if not np.any(fld):
            continue
        c0 = centroid(fld, grid)
        w = _support_halfwidth(fld, grid, c0)
        c1 = c0 + v * duration
        if max(abs(c0), abs(c1)) + w > half:
            raise WalkOffError(
                f"{name} moves {v * duration:.3g} m during the run and would wrap around the "
                f"{grid.length:.3g} m domain; enlarge the grid length (or use the comoving frame)"
            )


def _choose_steps(config: SolverConfig, coeffs: _Coefficients, state, duration: float) -> int:
    if duration == 0:
        return 0
    if config.n_steps is not None:
        return config.n_steps
    if config.dt is not None:
        n = max(1, math.ceil(duration / config.dt - 1e-9))
    else:
        n = config.min_steps
    rate = peak_phase_rate(coeffs, state)
    if config.dt is None:
        n = max(n, math.ceil(rate * duration / config.max_phase_per_step))
    elif rate * duration / n > config.max_phase_per_step:
        raise ValueError(
            f"dt gives a nonlinear phase of {rate * duration / n:.3g} rad per step, above "
            f"max_phase_per_step = {config.max_phase_per_step}"
        )
    return n


def _run(state, config, coeffs, duration, snapshot_cb=None):
    n = _choose_steps(config, coeffs, state, duration)
    if n == 0:
        return state, 0, 0.0
    dt = duration / n
    prop = Propagator(coeffs, state.grid, dt)
    S, P = state.S, state.P
    every = config.snapshot_every
    for i in range(1, n + 1):
        S, P = prop.step(S, P)
        if i % 64 == 0 or i == n:
            _check_finite(S, P, state.t + i * dt, i)
        if snapshot_cb is not None and every and (i % every == 0 or i == n):
            snapshot_cb(replace(state, S=S, P=P, t=state.t + i * dt))
    return replace(state, S=S, P=P, t=state.t + duration), n, dt


@dataclass(frozen=True)
class PhaseReport:
    """Phases read off the probe at its centroid after propagation.

    ``phi_S`` is the phase difference between runs with and without the
    signal; ``phi_P`` the self-phase relative to a lossless linear run.
    """

    phi_P: float
    phi_S: float
    I_det: float  # J
    phi_per_photon: float
    z_centroid: float
    n_steps: int
    dt: float
    phase_field: np.ndarray = field(repr=False)


def _interp_periodic(values: np.ndarray, grid: EnvelopeGrid, z0: float) -> float:
    x = (z0 - grid.z[0]) / grid.dz
    i0 = int(math.floor(x))
    frac = x - i0
    n = grid.n_points
    return float((1 - frac) * values[i0 % n] + frac * values[(i0 + 1) % n])


def _phase_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """arg(a) - arg(b) wrapped to [-pi, pi); exactly 0 where a == b."""
    d = np.angle(a) - np.angle(b)
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def detector_signal(state_final: PulseState, phase_field: np.ndarray) -> float:
    """Detector-weighted phase: sum of eps0 |P|^2 phi dz, in joules."""
    phase_field = np.asarray(phase_field, dtype=float)
    if phase_field.shape != state_final.P.shape:
        raise ValueError("phase field and probe envelope differ in shape")
    w = EPSILON_0 * np.abs(state_final.P) ** 2 * phase_field
    return math.fsum(w.tolist()) * state_final.grid.dz


def propagate(
    state: PulseState,
    config: SolverConfig,
    dispersion_s: DispersionPoint,
    dispersion_p: DispersionPoint,
    gamma: OverlapTable | np.ndarray,
    material: MaterialParams,
    duration: float | None = None,
    length: float | None = None,
    snapshot_cb: Callable[[PulseState], None] | None = None,
) -> tuple[PulseState, PhaseReport]:
    """Integrate for ``duration`` seconds (default ``length / v_p``).

    Three runs share the step sequence: the full problem, the same problem
    with the signal removed, and a lossless linear reference. Their probe
    phase differences give ``phi_S`` and ``phi_P``.
    """
    if duration is None:
        if length is None:
            raise ValueError("give a duration or a device length")
        if dispersion_p.v_g == 0:
            raise ValueError("probe group velocity is zero; duration L/v_p undefined")
        duration = length / abs(dispersion_p.v_g)
    if duration < 0:
        raise ValueError("duration must be >= 0")

    coeffs = coupling_coefficients(state, config, dispersion_s, dispersion_p, gamma, material)
    _check_walkoff(state, coeffs, duration)
    # every run must use the same step count so the splitting errors match
    n = _choose_steps(config, coeffs, state, duration)
    fixed = replace(config, n_steps=n, dt=None)

    full, n, dt = _run(state, fixed, coeffs, duration, snapshot_cb)
    quiet = replace(fixed, snapshot_every=0)
    no_signal_state = replace(state, S=np.zeros_like(state.S))
    no_signal, _, _ = _run(no_signal_state, quiet, coeffs, duration)
    ref_cfg = quiet.linear_reference()
    ref_coeffs = coupling_coefficients(state, ref_cfg, dispersion_s, dispersion_p, gamma, material)
    linear, _, _ = _run(no_signal_state, ref_cfg, ref_coeffs, duration)

    grid = state.grid
    phase_s = _phase_difference(full.P, no_signal.P)
    phase_p = _phase_difference(no_signal.P, linear.P)
    if not np.any(linear.P):
        z_c = 0.0
        phi_S = phi_P = 0.0
    else:
        z_c = centroid(linear.P, grid)
        phi_S = _interp_periodic(phase_s, grid, z_c)
        phi_P = _interp_periodic(phase_p, grid, z_c)
    I_det = detector_signal(full, phase_s)
    n_s = state.spec_s.photon_number
    report = PhaseReport(
        phi_P=phi_P,
        phi_S=phi_S,
        I_det=I_det,
        phi_per_photon=phi_S / n_s if n_s > 0 else 0.0,
        z_centroid=z_c,
        n_steps=n,
        dt=dt,
        phase_field=phase_s,
    )
    return full, report


SNAPSHOT_COLUMNS = (
    "z_m", "re_S_V", "im_S_V", "re_P_V", "im_P_V", "abs_S2_V2", "abs_P2_V2", "arg_P_rad",
)


def write_snapshot(path: str | Path, state: PulseState) -> None:
    """Write one snapshot as comma-separated text with a header row."""
    z = state.grid.z
    S, P = state.S, state.P
    cols = np.column_stack(
        [z, S.real, S.imag, P.real, P.imag, np.abs(S) ** 2, np.abs(P) ** 2, np.angle(P)]
    )
    with Path(path).open("w", newline="\n") as fh:
        fh.write(f"# t_s = {state.t!r}\n")
        fh.write(",".join(SNAPSHOT_COLUMNS) + "\n")
        for row in cols:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_snapshot(path: str | Path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(SNAPSHOT_COLUMNS)}


def gaussian_pair(
    spec_s: PulseSpec,
    spec_p: PulseSpec,
    v_s: float,
    v_p: float,
    grid: EnvelopeGrid,
    probe_length: float | None = None,
    signal_center: float = 0.0,
    probe_center: float = 0.0,
) -> tuple[Shape, Shape]:
    """Gaussian shapes with L_eff = v tau (probe optionally overridden)."""
    s = Gaussian.for_pulse(spec_s, v_s, signal_center)
    p = (
        Gaussian(probe_length, probe_center)
        if probe_length is not None
        else Gaussian.for_pulse(spec_p, v_p, probe_center)
    )
    return s, p


def domain_length_for(shapes: Sequence[Gaussian], excursion: float = 0.0, margin: float = 1.1) -> float:
    """Smallest periodic domain holding each Gaussian to 1e-6 plus a walk-off excursion."""
    # exp(-pi x^2 / L^2) = 1e-6  ->  x = L sqrt(ln(1e6)/pi)
    reach = math.sqrt(math.log(1.0 / EDGE_FRACTION) / math.pi)
    half = max(abs(g.center) + reach * g.length for g in shapes) + abs(excursion)
    return 2.0 * half * margin
