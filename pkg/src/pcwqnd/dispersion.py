"""Sampled waveguide dispersion: omega(k), group velocity and GVD.

Band files hold ``(k in units of pi/a, a/lambda)`` samples. The interpolant is
a cubic Hermite spline whose knot slopes come from a not-a-knot cubic spline
and are then passed through a Hyman monotonicity filter, so monotone data
gives a monotone omega(k) without giving up fourth-order accuracy on smooth
bands. Group velocity and its k-derivative are analytic derivatives of that
interpolant. No extrapolation past the sampled range.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .core import C

HEADER = ("k_pi_a", "a_over_lambda")


class BandFileError(ValueError):
    """Malformed band file; message names the offending row."""


class DegenerateBandEdge(ArithmeticError):
    """v_g is exactly zero, so c/v_g and anything dividing by v_g is undefined."""


class OutOfBandRange(ValueError):
    pass


def monotone_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Knot slopes of a not-a-knot spline, limited to keep monotone stretches monotone.

    Where the neighbouring secants share a sign the slope is clipped into
    ``[0, 3 * min|secant|]`` (with that sign), a sufficient condition for
    monotonicity of the Hermite cubic. At data extrema the spline slope is kept.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 2:
        s = (y[1] - y[0]) / (x[1] - x[0])
        return np.array([s, s])
    d = CubicSpline(x, y, bc_type="not-a-knot")(x, 1)
    secant = np.diff(y) / np.diff(x)
    left = np.concatenate(([secant[0]], secant))
    right = np.concatenate((secant, [secant[-1]]))
    out = d.copy()
    for i in range(x.size):
        sl, sr = left[i], right[i]
        if sl == 0.0 or sr == 0.0:
            out[i] = 0.0
        elif sl * sr > 0:
            sgn = math.copysign(1.0, sl)
            bound = 3.0 * min(abs(sl), abs(sr))
            out[i] = sgn * min(max(0.0, sgn * d[i]), bound)
    return out


@dataclass(frozen=True)
class BandData:
    """One sampled waveguide branch.

    ``k`` is in units of pi/a on [0, 1]; ``a_over_lambda`` is the normalized
    frequency. ``lattice_period`` is in metres.
    """

    band_index: int
    lattice_period: float
    k: np.ndarray
    a_over_lambda: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        f = np.asarray(self.a_over_lambda, dtype=float)
        if k.ndim != 1 or k.shape != f.shape:
            raise ValueError("k and a_over_lambda must be 1-D arrays of equal length")
        if k.size < 2:
            raise ValueError("a band needs at least 2 samples")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(f))):
            raise ValueError("band samples must be finite")
        if np.any(np.diff(k) <= 0):
            i = int(np.argmax(np.diff(k) <= 0)) + 1
            raise ValueError(f"k samples must be strictly increasing (sample {i})")
        if np.any(f <= 0):
            raise ValueError("normalized frequencies must be > 0")
        if not self.lattice_period > 0:
            raise ValueError("lattice period must be > 0")
        k.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a_over_lambda", f)

    @property
    def monotonic_k(self) -> bool:
        return bool(np.all(np.diff(self.k) > 0))

    @property
    def k_range(self) -> tuple[float, float]:
        return float(self.k[0]), float(self.k[-1])

    @cached_property
    def interpolant(self) -> CubicHermiteSpline:
        slopes = monotone_slopes(self.k, self.a_over_lambda)
        return CubicHermiteSpline(self.k, self.a_over_lambda, slopes, extrapolate=False)


@dataclass(frozen=True)
class DispersionPoint:
    k: float  # rad/m
    omega: float  # rad/s
    v_g: float  # m/s
    dvg_dk: float  # m^2/s

    def __post_init__(self):
        if abs(self.v_g) > C * (1 + 1e-12):
            raise ValueError(f"|v_g| = {abs(self.v_g):.6g} m/s exceeds c")


def evaluate(band: BandData, k: float) -> DispersionPoint:
    """Interpolate ``band`` at ``k`` (units of pi/a); SI outputs."""
    lo, hi = band.k_range
    if not lo <= k <= hi:
        raise OutOfBandRange(f"k = {k} pi/a outside sampled range [{lo}, {hi}]")
    spl = band.interpolant
    a = band.lattice_period
    f, df, d2f = (float(spl(k, nu)) for nu in (0, 1, 2))
    # omega = 2 pi c f / a and k_si = pi k / a, so d/dk_si = (a / pi) d/dk
    return DispersionPoint(
        k=k * math.pi / a,
        omega=2.0 * math.pi * C * f / a,
        v_g=2.0 * C * df,
        dvg_dk=2.0 * C * d2f * a / math.pi,
    )


def slowdown(point: DispersionPoint) -> float:
    """Group index c/|v_g|."""
    if point.v_g == 0.0:
        raise DegenerateBandEdge(f"v_g = 0 at k = {point.k:.6g} rad/m")
    return C / abs(point.v_g)


_META = re.compile(r"#\s*(\w+)\s*=\s*([^\s#]+)\s*(\S*)")


def load_band(path: str | Path) -> BandData:
    """Read a band file.

    Layout::

        # a = 4.2e-07 m
        # band = 1
        k_pi_a, a_over_lambda
        0.50, 0.2600
        ...
    """
    path = Path(path)
    meta: dict[str, tuple[str, str]] = {}
    rows: list[tuple[float, float]] = []
    header_seen = False
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                m = _META.match(stripped)
                if m:
                    meta[m.group(1)] = (m.group(2), m.group(3))
                continue
            cells = [c.strip() for c in next(csv.reader([stripped]))]
            if not header_seen:
                if tuple(cells) != HEADER:
                    raise BandFileError(
                        f"{path}:{lineno}: expected header {', '.join(HEADER)!r}, got {stripped!r}"
                    )
                header_seen = True
                continue
            if len(cells) != 2:
                raise BandFileError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
            try:
                k, f = float(cells[0]), float(cells[1])
            except ValueError:
                raise BandFileError(f"{path}:{lineno}: non-numeric value in {stripped!r}") from None
            if not (math.isfinite(k) and math.isfinite(f)):
                raise BandFileError(f"{path}:{lineno}: non-finite value in {stripped!r}")
            if f <= 0:
                raise BandFileError(f"{path}:{lineno}: a_over_lambda must be > 0")
            if rows and k <= rows[-1][0]:
                raise BandFileError(
                    f"{path}:{lineno}: k = {k} not strictly greater than previous {rows[-1][0]}"
                )
            rows.append((k, f))
    if not header_seen:
        raise BandFileError(f"{path}: missing header line {', '.join(HEADER)!r}")
    if "a" not in meta:
        raise BandFileError(f"{path}: missing metadata line '# a = <value> m'")
    if "band" not in meta:
        raise BandFileError(f"{path}: missing metadata line '# band = <m>'")
    if len(rows) < 2:
        raise BandFileError(f"{path}: need at least 2 samples, got {len(rows)}")
    a_value, a_unit = meta["a"]
    if a_unit not in ("", "m"):
        raise BandFileError(f"{path}: lattice period must be given in m, got {a_unit!r}")
    try:
        a = float(a_value)
        band_index = int(meta["band"][0])
    except ValueError as exc:
        raise BandFileError(f"{path}: bad metadata value ({exc})") from None
    k, f = np.array(rows).T
    return BandData(band_index=band_index, lattice_period=a, k=k, a_over_lambda=f)


def save_band(band: BandData, path: str | Path) -> None:
    with Path(path).open("w", newline="\n") as fh:
        fh.write(f"# a = {band.lattice_period!r} m\n")
        fh.write(f"# band = {band.band_index}\n")
        fh.write(", ".join(HEADER) + "\n")
        for k, f in zip(band.k, band.a_over_lambda):
            fh.write(f"{float(k)!r}, {float(f)!r}\n")
