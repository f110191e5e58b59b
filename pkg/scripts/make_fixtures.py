"""Regenerate the synthetic band and mode files bundled in src/pcwqnd/data.

    python scripts/make_fixtures.py [--out DIR]

The scenario configs in the same directory are hand-written and not touched.
"""
from __future__ import annotations

import argparse
from pathlib import Path

from pcwqnd.dispersion import save_band
from pcwqnd.modes import save_mode
from pcwqnd.synthetic import cosine_band, quadratic_band, slab_cell, slab_modes

DATA = Path(__file__).resolve().parents[1] / "src" / "pcwqnd" / "data"
LATTICE = 420e-9


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DATA)
    args = parser.parse_args(argv)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    # slow-light branch flattening at the zone edge; a/lambda spans 0.26-0.27
    save_band(cosine_band(65, LATTICE, band_index=0), out / "cosine_band.txt")
    save_band(quadratic_band(33, LATTICE, band_index=1), out / "quadratic_band.txt")

    grid = slab_cell(n_xy=16, nz=8, a=LATTICE, width=1.2e-6, slab=0.5e-6)
    even, odd = slab_modes(grid, sigma=0.3e-6)
    save_mode(out / "slab_mode_even.txt", even, grid)
    save_mode(out / "slab_mode_odd.txt", odd, grid)
    print(f"fixtures written to {out}")


if __name__ == "__main__":
    main()
