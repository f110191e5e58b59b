"""Physical constants, unit conversion and the shared value types.

Everything inside the package is SI. Non-SI units (cm^2/W, cm/GW, 1/cm,
um, ...) only appear at I/O boundaries and go through :func:`convert_units`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Final

from scipy import constants as _sc

# CODATA 2018 (scipy.constants); c and hbar are exact by SI definition.
C: Final[float] = _sc.c  # 299792458.0 m/s
HBAR: Final[float] = _sc.hbar  # 1.0545718176461565e-34 J s
EPSILON_0: Final[float] = _sc.epsilon_0  # 8.8541878128e-12 F/m


class UnitError(ValueError):
    """Raised for unknown unit tags or dimensionally incompatible conversions."""


# unit tag -> (dimension, factor to SI). Factors are exact decimal literals.
_UNITS: dict[str, tuple[str, float]] = {
    # nonlinear (Kerr) index
    "m2/W": ("kerr_index", 1.0),
    "cm2/W": ("kerr_index", 1e-4),
    # linear attenuation
    "1/m": ("loss", 1.0),
    "1/cm": ("loss", 1e2),
    "1/mm": ("loss", 1e3),
    "1/um": ("loss", 1e6),
    # two-photon absorption coefficient
    "m/W": ("tpa", 1.0),
    "cm/W": ("tpa", 1e-2),
    "cm/GW": ("tpa", 1e-11),
    # length
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    # area
    "m2": ("area", 1.0),
    "um2": ("area", 1e-12),
    "nm2": ("area", 1e-18),
    # energy
    "J": ("energy", 1.0),
    "kJ": ("energy", 1e3),
    "mJ": ("energy", 1e-3),
    "uJ": ("energy", 1e-6),
    "nJ": ("energy", 1e-9),
    "pJ": ("energy", 1e-12),
    # time
    "s": ("time", 1.0),
    "ns": ("time", 1e-9),
    "ps": ("time", 1e-12),
    "fs": ("time", 1e-15),
    # intensity
    "W/m2": ("intensity", 1.0),
    "W/cm2": ("intensity", 1e4),
    "GW/cm2": ("intensity", 1e13),
}


def unit_dimension(unit: str) -> str:
    try:
        return _UNITS[unit][0]
    except KeyError:
        raise UnitError(f"unknown unit tag {unit!r}") from None


def convert_units(value: float, from_unit: str, to_unit: str) -> float:
    """Convert ``value`` between two unit tags of the same dimension.

    >>> convert_units(0.1, "1/cm", "1/m")
    10.0
    """
    dim_from, f_from = _UNITS.get(from_unit, (None, None))
    dim_to, f_to = _UNITS.get(to_unit, (None, None))
    if dim_from is None:
        raise UnitError(f"unknown unit tag {from_unit!r}")
    if dim_to is None:
        raise UnitError(f"unknown unit tag {to_unit!r}")
    if dim_from != dim_to:
        raise UnitError(
            f"cannot convert {from_unit!r} ({dim_from}) to {to_unit!r} ({dim_to})"
        )
    if f_from == f_to:
        return float(value)
    return value * f_from / f_to


def to_si(value: float, unit: str) -> float:
    dim, _ = _UNITS.get(unit, (None, None))
    if dim is None:
        raise UnitError(f"unknown unit tag {unit!r}")
    si = {d: u for u, (d, f) in _UNITS.items() if f == 1.0}[dim]
    return convert_units(value, unit, si)


def omega_from_wavelength(wavelength: float) -> float:
    return 2.0 * math.pi * C / wavelength


def photon_energy(wavelength: float) -> float:
    """hbar * omega for a vacuum wavelength in metres."""
    return HBAR * omega_from_wavelength(wavelength)


@dataclass(frozen=True)
class MaterialParams:
    """Bulk optical constants of the waveguide material, SI units.

    ``n2`` may be negative (InGaAsP). ``alpha2 = 0`` is the lossless
    idealization used below the half-bandgap.
    """

    n: float
    n2: float  # m^2/W
    alpha1: float = 0.0  # 1/m
    alpha2: float = 0.0  # m/W
    name: str = ""

    def __post_init__(self):
        if not self.n >= 1.0:
            raise ValueError(f"refractive index must be >= 1, got {self.n}")
        if not self.alpha1 >= 0.0:
            raise ValueError(f"alpha1 must be >= 0, got {self.alpha1}")
        if not self.alpha2 >= 0.0:
            raise ValueError(f"alpha2 must be >= 0, got {self.alpha2}")
        if not math.isfinite(self.n2):
            raise ValueError("n2 must be finite")

    @classmethod
    def from_lab_units(
        cls,
        n: float,
        n2_cm2_per_W: float,
        alpha1_per_cm: float = 0.0,
        alpha2_cm_per_GW: float = 0.0,
        name: str = "",
    ) -> "MaterialParams":
        """Build from the units materials tables are usually quoted in."""
        return cls(
            n=n,
            n2=convert_units(n2_cm2_per_W, "cm2/W", "m2/W"),
            alpha1=convert_units(alpha1_per_cm, "1/cm", "1/m"),
            alpha2=convert_units(alpha2_cm_per_GW, "cm/GW", "m/W"),
            name=name,
        )

    @property
    def chi3_real(self) -> float:
        # 3 chi3 = c n^2 n2
        return C * self.n**2 * self.n2 / 3.0


def kappa(material: MaterialParams) -> float:
    """Nonlinear coupling constant c * eps0 * n2 (F m^2 / (W s))."""
    return C * EPSILON_0 * material.n2


ALGAAS_1500 = MaterialParams.from_lab_units(
    n=3.4, n2_cm2_per_W=1.5e-13, alpha1_per_cm=0.1, alpha2_cm_per_GW=0.2,
    name="AlGaAs@1500nm",
)
ALGAAS_1620 = MaterialParams.from_lab_units(
    n=3.4, n2_cm2_per_W=1.5e-13, alpha1_per_cm=0.1, alpha2_cm_per_GW=0.0,
    name="AlGaAs@1620nm",
)
INGAASP_1545 = MaterialParams.from_lab_units(
    n=3.4, n2_cm2_per_W=-5.9e-12, alpha1_per_cm=1.0, alpha2_cm_per_GW=0.0,
    name="InGaAsP@1545nm",
)


class KUnit(str, enum.Enum):
    RAD_PER_M = "rad/m"
    PI_OVER_A = "pi/a"


@dataclass(frozen=True)
class CarrierSpec:
    """Carrier of a pulse: vacuum wavelength plus the waveguide branch it rides on."""

    wavelength: float  # m
    band_index: int = 0
    k: float | None = None
    k_unit: KUnit = KUnit.PI_OVER_A
    omega: float = field(init=False)

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")
        object.__setattr__(self, "omega", omega_from_wavelength(self.wavelength))
        object.__setattr__(self, "k_unit", KUnit(self.k_unit))

    @property
    def photon_energy(self) -> float:
        return HBAR * self.omega

    def k_si(self, lattice_period: float | None = None) -> float:
        if self.k is None:
            raise ValueError("carrier has no Bloch wavevector")
        if self.k_unit is KUnit.RAD_PER_M:
            return self.k
        if lattice_period is None:
            raise ValueError("lattice period needed to convert k from pi/a")
        return self.k * math.pi / lattice_period


class StateKind(str, enum.Enum):
    COHERENT = "coherent"
    NUMBER = "number"


@dataclass(frozen=True)
class PulseSpec:
    """A pulse: carrier, temporal width and mean photon number.

    ``tau`` is the width entering the effective length ``L_eff = v_g * tau``,
    i.e. the integral of the peak-normalized intensity profile over time.
    """

    carrier: CarrierSpec
    tau: float  # s
    photon_number: float
    state_kind: StateKind = StateKind.COHERENT

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.photon_number >= 0:
            raise ValueError(f"photon number must be >= 0, got {self.photon_number}")
        object.__setattr__(self, "state_kind", StateKind(self.state_kind))

    @property
    def energy(self) -> float:
        return self.photon_number * self.carrier.photon_energy
