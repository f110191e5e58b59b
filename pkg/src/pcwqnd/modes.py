"""Bloch mode fields on one unit cell: normalization, orthogonality, overlaps.

All cell integrals use the midpoint (voxel-sum) rule with ``math.fsum`` so
the reduction order, and therefore the result, is deterministic.

Mode fields are stored raw; :func:`normalize` applies the unit-cell norm
``(1/a) * sum(eps * |u|^2) * dV = 1`` that the overlap factors assume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

NORM_TOL = 1e-6
# voxels with eps within this of 1 count as air
AIR_TOL = 1e-9


class ModeFileError(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class NotNormalized(ValueError):
    pass


def _fsum(values: np.ndarray) -> float:
    return math.fsum(np.ravel(values).tolist())


@dataclass(frozen=True)
class DielectricGrid:
    """Dielectric map of one unit cell.

    ``eps`` is the relative permittivity; ``eps_tilde`` equals n^2 inside the
    nonlinear material and 0 in air. Arrays have shape ``(nx, ny, nz)`` with z
    along the waveguide; the z-extent must equal the lattice period.
    """

    voxel_size: tuple[float, float, float]
    eps: np.ndarray
    eps_tilde: np.ndarray
    lattice_period: float

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        mask = np.asarray(self.eps_tilde, dtype=float)
        if eps.ndim != 3 or eps.shape != mask.shape:
            raise ValueError("eps and eps_tilde must be 3-D arrays of the same shape")
        if np.any(eps < 1.0 - AIR_TOL):
            raise ValueError("eps must be >= 1 everywhere")
        if np.any(mask < 0):
            raise ValueError("eps_tilde must be >= 0")
        air = np.abs(eps - 1.0) <= AIR_TOL
        if np.any(mask[air] != 0.0):
            raise ValueError("eps_tilde must vanish where eps = 1 (air)")
        dx, dy, dz = (float(v) for v in self.voxel_size)
        if min(dx, dy, dz) <= 0:
            raise ValueError("voxel sizes must be > 0")
        z_extent = eps.shape[2] * dz
        if abs(z_extent - self.lattice_period) > dz * (1 + 1e-9):
            raise ValueError(
                f"z-extent {z_extent:.6g} m differs from lattice period "
                f"{self.lattice_period:.6g} m by more than one voxel"
            )
        eps.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "eps_tilde", mask)
        object.__setattr__(self, "voxel_size", (dx, dy, dz))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.eps.shape

    @property
    def voxel_volume(self) -> float:
        dx, dy, dz = self.voxel_size
        return dx * dy * dz

    @property
    def cell_volume(self) -> float:
        return self.voxel_volume * self.eps.size

    def same_as(self, other: "DielectricGrid") -> bool:
        return (
            self is other
            or (
                self.shape == other.shape
                and self.voxel_size == other.voxel_size
                and self.lattice_period == other.lattice_period
                and np.array_equal(self.eps, other.eps)
                and np.array_equal(self.eps_tilde, other.eps_tilde)
            )
        )


@dataclass(frozen=True)
class BlochModeField:
    """Periodic part u(r) of a Bloch mode, shape ``(3, nx, ny, nz)`` complex."""

    band_index: int
    u: np.ndarray
    k_tag: str = ""
    normalized: bool = False
    scale: float = 1.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.ndim != 4 or u.shape[0] != 3:
            raise ValueError("u must have shape (3, nx, ny, nz)")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def intensity(self) -> np.ndarray:
        """|u|^2 summed over the three vector components."""
        return np.sum(np.abs(self.u) ** 2, axis=0)


def _check_grid(mode: BlochModeField, grid: DielectricGrid) -> None:
    if mode.u.shape[1:] != grid.shape:
        raise GridMismatch(f"mode shape {mode.u.shape[1:]} does not match grid {grid.shape}")


def cell_norm(mode: BlochModeField, grid: DielectricGrid) -> float:
    """(1/a) * integral over the cell of eps |u|^2."""
    _check_grid(mode, grid)
    return _fsum(grid.eps * mode.intensity) * grid.voxel_volume / grid.lattice_period


def normalize(mode: BlochModeField, grid: DielectricGrid) -> BlochModeField:
    """Rescale ``mode`` to unit cell norm; the applied factor is in ``.scale``."""
    norm = cell_norm(mode, grid)
    if not norm > 0 or not math.isfinite(norm):
        raise ValueError(f"cannot normalize a mode with cell norm {norm!r}")
    s = 1.0 / math.sqrt(norm)
    return replace(mode, u=mode.u * s, normalized=True, scale=s)


def _require_normalized(mode: BlochModeField, grid: DielectricGrid) -> None:
    norm = cell_norm(mode, grid)
    if abs(norm - 1.0) > NORM_TOL:
        raise NotNormalized(
            f"band {mode.band_index} has cell norm {norm:.9g}; call normalize() first"
        )


def check_orthogonality(
    mode_a: BlochModeField, mode_b: BlochModeField, grid: DielectricGrid
) -> float:
    """|(1/a) * integral of eps u_a* . u_b| over the cell."""
    _check_grid(mode_a, grid)
    _check_grid(mode_b, grid)
    integrand = grid.eps * np.sum(np.conj(mode_a.u) * mode_b.u, axis=0)
    re = _fsum(integrand.real)
    im = _fsum(integrand.imag)
    return abs(complex(re, im)) * grid.voxel_volume / grid.lattice_period


def gamma_overlap(
    mode_a: BlochModeField, mode_b: BlochModeField, grid: DielectricGrid
) -> float:
    """Kerr overlap factor (1/a) * integral of eps_tilde |u_a|^2 |u_b|^2, in 1/m^2."""
    _require_normalized(mode_a, grid)
    _require_normalized(mode_b, grid)
    # elementwise products commute and fsum is correctly rounded, so the
    # result is symmetric in its arguments bit for bit
    integrand = grid.eps_tilde * (mode_a.intensity * mode_b.intensity)
    return _fsum(integrand) * grid.voxel_volume / grid.lattice_period


def mode_volume(
    mode_a: BlochModeField, mode_b: BlochModeField, grid: DielectricGrid
) -> float:
    """Integral of eps |u_a||u_b| divided by its peak voxel value, in m^3.

    For ``mode_a is mode_b`` this is the usual eps |u|^2 mode volume.
    """
    _require_normalized(mode_a, grid)
    _require_normalized(mode_b, grid)
    density = grid.eps * (np.sqrt(mode_a.intensity) * np.sqrt(mode_b.intensity))
    peak = float(density.max())
    if peak <= 0:
        raise ValueError("modes do not overlap anywhere in the cell")
    return _fsum(density) * grid.voxel_volume / peak


@dataclass(frozen=True)
class OverlapTable:
    """Pairwise gamma (1/m^2) and mode volume (m^3) for a set of bands."""

    bands: tuple[int, ...]
    gamma: np.ndarray
    mode_volume: np.ndarray
    lattice_period: float
    gamma_a_units: np.ndarray = field(init=False)
    volume_a_units: np.ndarray = field(init=False)

    def __post_init__(self):
        a = self.lattice_period
        object.__setattr__(self, "gamma_a_units", self.gamma * a**2)
        object.__setattr__(self, "volume_a_units", self.mode_volume / a**3)

    def index(self, band: int) -> int:
        return self.bands.index(band)

    def gamma_between(self, band_a: int, band_b: int) -> float:
        return float(self.gamma[self.index(band_a), self.index(band_b)])


def overlap_table(modes: list[BlochModeField], grid: DielectricGrid) -> OverlapTable:
    """Normalize each raw mode and tabulate gamma and V for every pair."""
    if not modes:
        raise ValueError("need at least one mode")
    normed = [normalize(m, grid) for m in modes]
    n = len(normed)
    gamma = np.zeros((n, n))
    volume = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            gamma[i, j] = gamma[j, i] = gamma_overlap(normed[i], normed[j], grid)
            volume[i, j] = volume[j, i] = mode_volume(normed[i], normed[j], grid)
    return OverlapTable(
        bands=tuple(m.band_index for m in modes),
        gamma=gamma,
        mode_volume=volume,
        lattice_period=grid.lattice_period,
    )


# ---------------------------------------------------------------------------
# mode files
#
# Text variant (small fixtures):
#   # nx ny nz = 8 8 16
#   # voxel = 2.5e-08 2.5e-08 2.5e-08 m
#   # a = 4e-07 m
#   # band = 1
#   # k = 1.0
#   eps, eps_tilde, re_ux, im_ux, re_uy, im_uy, re_uz, im_uz
#   ... one row per voxel, C order over (x, y, z), z fastest
#
# Binary variant: numpy .npz with arrays eps, eps_tilde, u (3, nx, ny, nz
# complex), voxel (3,), a (), band (), k ().
# ---------------------------------------------------------------------------

COLUMNS = ("eps", "eps_tilde", "re_ux", "im_ux", "re_uy", "im_uy", "re_uz", "im_uz")


def save_mode(path: str | Path, mode: BlochModeField, grid: DielectricGrid) -> None:
    path = Path(path)
    _check_grid(mode, grid)
    if path.suffix == ".npz":
        np.savez(
            path,
            eps=grid.eps,
            eps_tilde=grid.eps_tilde,
            u=mode.u,
            voxel=np.array(grid.voxel_size),
            a=np.array(grid.lattice_period),
            band=np.array(mode.band_index),
            k=np.array(mode.k_tag),
        )
        return
    nx, ny, nz = grid.shape
    cols = [grid.eps.ravel(), grid.eps_tilde.ravel()]
    for comp in mode.u:
        cols += [comp.real.ravel(), comp.imag.ravel()]
    data = np.column_stack(cols)
    header = "\n".join(
        [
            f"# nx ny nz = {nx} {ny} {nz}",
            "# voxel = " + " ".join(repr(v) for v in grid.voxel_size) + " m",
            f"# a = {grid.lattice_period!r} m",
            f"# band = {mode.band_index}",
            f"# k = {mode.k_tag}",
            ", ".join(COLUMNS),
        ]
    )
    np.savetxt(path, data, delimiter=", ", header=header, comments="", fmt="%.17g")


def _parse_header(path: Path) -> tuple[dict[str, list[str]], int]:
    meta: dict[str, list[str]] = {}
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if s.startswith("#"):
                key, sep, value = s[1:].partition("=")
                if not sep:
                    continue
                meta[key.strip()] = value.split()
                continue
            cols = tuple(c.strip() for c in s.split(","))
            if cols != COLUMNS:
                raise ModeFileError(
                    f"{path}:{lineno}: expected column header {', '.join(COLUMNS)!r}"
                )
            return meta, lineno
    raise ModeFileError(f"{path}: missing column header line")


def _meta_field(meta, key, path, count, conv):
    if key not in meta:
        raise ModeFileError(f"{path}: missing header field {key!r}")
    vals = [v for v in meta[key] if v != "m"]
    if len(vals) < count:
        raise ModeFileError(f"{path}: header field {key!r} needs {count} value(s)")
    try:
        return [conv(v) for v in vals[:count]]
    except ValueError:
        raise ModeFileError(f"{path}: header field {key!r} has a non-numeric value") from None


def load_mode(path: str | Path) -> tuple[BlochModeField, DielectricGrid]:
    """Read a raw (unnormalized) mode and its grid from a text or .npz file."""
    path = Path(path)
    if not path.exists():
        raise ModeFileError(f"{path}: no such mode file")
    if path.suffix == ".npz":
        with np.load(path) as z:
            missing = [k for k in ("eps", "eps_tilde", "u", "voxel", "a", "band") if k not in z]
            if missing:
                raise ModeFileError(f"{path}: missing header field {missing[0]!r}")
            grid = DielectricGrid(
                voxel_size=tuple(z["voxel"].tolist()),
                eps=z["eps"],
                eps_tilde=z["eps_tilde"],
                lattice_period=float(z["a"]),
            )
            k_tag = str(z["k"]) if "k" in z else ""
            mode = BlochModeField(band_index=int(z["band"]), u=z["u"], k_tag=k_tag)
        return mode, grid

    meta, header_line = _parse_header(path)
    nx, ny, nz = _meta_field(meta, "nx ny nz", path, 3, int)
    voxel = _meta_field(meta, "voxel", path, 3, float)
    (a,) = _meta_field(meta, "a", path, 1, float)
    (band,) = _meta_field(meta, "band", path, 1, int)
    k_tag = " ".join(meta.get("k", []))
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=header_line, ndmin=2)
    except ValueError as exc:
        raise ModeFileError(f"{path}: bad voxel record ({exc})") from None
    if data.shape != (nx * ny * nz, len(COLUMNS)):
        raise ModeFileError(
            f"{path}: header field 'nx ny nz' = {nx} {ny} {nz} implies "
            f"{nx * ny * nz} voxel records, found {data.shape[0]}"
        )
    if not np.all(np.isfinite(data)):
        row = int(np.argmax(~np.all(np.isfinite(data), axis=1)))
        raise ModeFileError(f"{path}:{header_line + 1 + row}: non-finite voxel value")
    shape = (nx, ny, nz)
    u = np.stack(
        [(data[:, 2 + 2 * c] + 1j * data[:, 3 + 2 * c]).reshape(shape) for c in range(3)]
    )
    try:
        grid = DielectricGrid(
            voxel_size=tuple(voxel),
            eps=data[:, 0].reshape(shape),
            eps_tilde=data[:, 1].reshape(shape),
            lattice_period=a,
        )
    except ValueError as exc:
        raise ModeFileError(f"{path}: {exc}") from None
    return BlochModeField(band_index=band, u=u, k_tag=k_tag), grid
