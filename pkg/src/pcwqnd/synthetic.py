"""Synthetic bands and mode fields with closed-form properties.

Used for the bundled fixtures and the test suite; none of this stands in for
FDTD data.
"""
from __future__ import annotations

import numpy as np

from .dispersion import BandData
from .modes import BlochModeField, DielectricGrid


def cosine_band(
    n_samples: int,
    a: float,
    f0: float = 0.26,
    width: float = 0.01,
    band_index: int = 0,
    k_min: float = 0.0,
) -> BandData:
    """a/lambda = f0 + width * (1 - cos(pi k)) / 2 on k in [k_min, 1] (units of pi/a).

    Flat (v_g = 0) at k = 0 and at the band edge k = 1.
    """
    k = np.linspace(k_min, 1.0, n_samples)
    return BandData(band_index, a, k, cosine_band_frequency(k, f0, width))


def cosine_band_frequency(k, f0=0.26, width=0.01):
    return f0 + 0.5 * width * (1.0 - np.cos(np.pi * np.asarray(k)))


def cosine_band_slope(k, width=0.01):
    """d(a/lambda)/dk, k in units of pi/a."""
    return 0.5 * width * np.pi * np.sin(np.pi * np.asarray(k))


def quadratic_band(n_samples, a, f0=0.26, curvature=0.02, k0=0.5, band_index=0) -> BandData:
    k = np.linspace(0.0, 1.0, n_samples)
    return BandData(band_index, a, k, f0 + curvature * (k - k0) ** 2)


def uniform_cell(shape=(4, 4, 8), a=4e-7, eps=3.4**2, transverse=(2e-7, 2e-7)):
    """All-material cell of uniform permittivity."""
    nx, ny, nz = shape
    voxel = (transverse[0] / nx, transverse[1] / ny, a / nz)
    e = np.full(shape, float(eps))
    return DielectricGrid(voxel, e, e.copy(), a)


def uniform_mode(grid: DielectricGrid, amplitude=1.0, band_index=0, polarization=(1, 0, 0)):
    pol = np.asarray(polarization, dtype=complex)
    u = amplitude * pol[:, None, None, None] * np.ones((3, *grid.shape))
    return BlochModeField(band_index, u)


def slab_cell(
    n_xy: int = 16,
    nz: int = 8,
    a: float = 4e-7,
    width: float = 1.2e-6,
    slab: float = 0.5e-6,
    n: float = 3.4,
) -> DielectricGrid:
    """Square transverse window with a high-index slab |y| < slab/2.

    Voxel centres are symmetric about y = 0 and the slab faces sit on voxel
    boundaries when ``slab / (width / n_xy)`` is an integer.
    """
    d = width / n_xy
    y = (np.arange(n_xy) - (n_xy - 1) / 2) * d
    inside = np.abs(y) < slab / 2
    eps = np.where(inside[None, :, None], n**2, 1.0) * np.ones((n_xy, n_xy, nz))
    return DielectricGrid((d, d, a / nz), eps, np.where(eps > 1.0, n**2, 0.0), a)


def cell_coordinates(grid: DielectricGrid):
    nx, ny, nz = grid.shape
    dx, dy, dz = grid.voxel_size
    x = (np.arange(nx) - (nx - 1) / 2) * dx
    y = (np.arange(ny) - (ny - 1) / 2) * dy
    z = (np.arange(nz) + 0.5) * dz
    return np.meshgrid(x, y, z, indexing="ij")


def slab_modes(grid: DielectricGrid, sigma: float = 0.3e-6, modulation: float = 0.2):
    """Two raw modes of opposite y-parity: an even Gaussian and an odd y * Gaussian.

    Both carry a z-periodic modulation 1 + m cos(2 pi z / a); the even mode is
    polarized along x, the odd one mixes x and z components.
    """
    X, Y, Z = cell_coordinates(grid)
    env = np.exp(-(X**2 + Y**2) / sigma**2) * (1 + modulation * np.cos(2 * np.pi * Z / grid.lattice_period))
    even = np.zeros((3, *grid.shape), dtype=complex)
    even[0] = env
    odd = np.zeros((3, *grid.shape), dtype=complex)
    odd[0] = (Y / sigma) * env
    odd[2] = 0.3j * (Y / sigma) * env
    return BlochModeField(0, even, k_tag="1.0"), BlochModeField(1, odd, k_tag="1.0")
