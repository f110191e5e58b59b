"""Command-line entry point: ``pcwqnd estimate|overlap|dispersion|propagate|sweep``.

Each subcommand takes ``--config <path>`` and ``--out <dir>``. Exit codes:
0 success, 2 configuration or input-data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dispersion as disp
from . import feasibility as fz
from . import modes as md
from . import propagation as pr
from .config import Config, ConfigError, load_config
from .core import C, CarrierSpec, MaterialParams, PulseSpec, StateKind, omega_from_wavelength

log = logging.getLogger("pcwqnd")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    """Bad input data referenced by an otherwise valid config."""


# ---------------------------------------------------------------- helpers


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_keyvalue(path: Path, pairs: list[tuple[str, object]]) -> None:
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        for k, v in pairs:
            fh.write(f"{k} = {_fmt(v)}\n")


def material_from(cfg: Config) -> MaterialParams:
    return MaterialParams(
        n=cfg.get_float("material.n"),
        n2=cfg.get_quantity("material.n2", "kerr_index"),
        alpha1=cfg.get_quantity("material.alpha1", "loss", default=0.0),
        alpha2=cfg.get_quantity("material.alpha2", "tpa", default=0.0),
        name=cfg.get_str("material.name", default=""),
    )


def pulse_from(cfg: Config, prefix: str, default_tau: float | None = None) -> PulseSpec:
    carrier = CarrierSpec(
        wavelength=cfg.get_quantity(f"{prefix}.wavelength", "length"),
        band_index=cfg.get_int(f"{prefix}.band", default=0),
    )
    tau = cfg.get_quantity(f"{prefix}.tau", "time", default=default_tau)
    return PulseSpec(
        carrier=carrier,
        tau=tau,
        photon_number=cfg.get_float(f"{prefix}.photon_number", default=1.0),
        state_kind=cfg.get_str(f"{prefix}.state", default="number", choices=("number", "coherent")),
    )


def _gamma_sp(cfg: Config) -> float:
    if cfg.has_quantity("pcw.effective_area"):
        return 1.0 / cfg.get_quantity("pcw.effective_area", "area")
    if "pcw.gamma_sp_per_m2" in cfg:
        return cfg.get_float("pcw.gamma_sp_per_m2")
    if "pcw.gamma_sp_a_units" in cfg:
        a = cfg.get_quantity("pcw.lattice_period", "length")
        return cfg.get_float("pcw.gamma_sp_a_units") / a**2
    raise ConfigError(
        f"{cfg.path}: pcw scenario needs pcw.effective_area_<unit>, pcw.gamma_sp_per_m2 "
        "or pcw.gamma_sp_a_units with pcw.lattice_period_<unit>"
    )


# ---------------------------------------------------------------- estimate


def estimate_from_config(cfg: Config) -> fz.FeasibilityReport:
    kind = cfg.get_str("scenario.kind", choices=("bulk", "pcw"))
    material = material_from(cfg)
    signal = pulse_from(cfg, "signal")
    probe_lambda = cfg.get_quantity("probe.wavelength", "length")
    probe_tau = cfg.get_quantity("probe.tau", "time", default=signal.tau)
    length = cfg.get_quantity("device.length", "length")
    beta = cfg.get_float("noise.beta") if "noise.beta" in cfg else None
    inputs: dict[str, object] = {
        "scenario": kind,
        "material": material.name,
        "n2_m2_per_W": material.n2,
        "length_m": length,
        "tau_s_s": signal.tau,
        "lambda_s_m": signal.carrier.wavelength,
        "lambda_p_m": probe_lambda,
        "N_s": signal.photon_number,
        "signal_state": signal.state_kind.value,
    }
    if beta is not None:
        inputs["beta"] = beta

    area_bulk = cfg.get_quantity("bulk.area", "area", default=math.nan)
    if kind == "bulk":
        scenario = fz.BulkScenario(
            material, signal.carrier.wavelength, probe_lambda, signal.tau, area_bulk, length
        )
        phi = fz.bulk_phase_per_photon(scenario)
        enh = 1.0
        v_p = C
        area = area_bulk
        inputs["area_m2"] = area_bulk
    else:
        v_s = cfg.get_float("pcw.vg_s_over_c") * C
        v_p = cfg.get_float("pcw.vg_p_over_c") * C
        gamma = _gamma_sp(cfg)
        scenario = fz.PcwScenario(
            material, gamma, v_s, v_p, length, signal.tau,
            signal.carrier.omega, omega_from_wavelength(probe_lambda),
        )
        phi = fz.phase_ideal(scenario)
        area = cfg.get_quantity("pcw.area", "area", default=1.0 / gamma if gamma > 0 else math.nan)
        if math.isfinite(area_bulk):
            bulk = fz.BulkScenario(
                material, signal.carrier.wavelength, probe_lambda, signal.tau, area_bulk, length
            )
            enh = phi / fz.bulk_phase_per_photon(bulk) if material.n2 != 0 else math.nan
        else:
            enh = math.nan
        inputs.update(gamma_sp_per_m2=gamma, v_s_m_per_s=v_s, v_p_m_per_s=v_p, area_m2=area)

    intensity = None
    if cfg.has_quantity("loss.intensity"):
        intensity = cfg.get_quantity("loss.intensity", "intensity")
    elif cfg.has_quantity("loss.pulse_energy"):
        intensity = fz.pulse_intensity(
            cfg.get_quantity("loss.pulse_energy", "energy"),
            cfg.get_quantity("loss.pulse_duration", "time", default=probe_tau),
            cfg.get_quantity("loss.area", "area", default=area),
        )
    if intensity is not None:
        inputs["tpa_intensity_W_per_m2"] = intensity
    return fz.build_report(
        phi,
        signal,
        omega_from_wavelength(probe_lambda),
        beta=beta,
        enhancement_factor=enh,
        material=material,
        v_p=v_p,
        intensity=intensity,
        probe_tau=probe_tau,
        probe_area=area,
        inputs=inputs,
    )


def cmd_estimate(cfg: Config, out: Path) -> int:
    report = estimate_from_config(cfg)
    rows = report.as_rows()
    write_keyvalue(out / "report.txt", rows)
    write_csv(out / "report.csv", [k for k, _ in rows], [[v for _, v in rows]])
    for k, v in rows[:7]:
        print(f"{k} = {_fmt(v)}")
    return EXIT_OK


# ---------------------------------------------------------------- overlap


def cmd_overlap(cfg: Config, out: Path) -> int:
    files = cfg.get_list("modes.files")
    if not files:
        raise cfg.error("modes.files", "need at least one mode file")
    loaded = []
    for name in files:
        p = Path(name) if Path(name).is_absolute() else cfg.base_dir / name
        try:
            loaded.append(md.load_mode(p))
        except md.ModeFileError as exc:
            raise InputError(str(exc)) from None
    grid = loaded[0][1]
    for (mode, g), name in zip(loaded[1:], files[1:]):
        if not grid.same_as(g):
            raise InputError(f"{name}: grid differs from {files[0]}; all modes must share one cell")
    modes = [m for m, _ in loaded]
    table = md.overlap_table(modes, grid)
    normed = [md.normalize(m, grid) for m in modes]
    rows = []
    n = len(modes)
    for i in range(n):
        for j in range(i, n):
            rows.append([
                table.bands[i], table.bands[j],
                float(table.gamma[i, j]), float(table.gamma_a_units[i, j]),
                float(table.mode_volume[i, j]), float(table.volume_a_units[i, j]),
                md.check_orthogonality(normed[i], normed[j], grid),
            ])
    header = [
        "band_i", "band_j", "gamma_per_m2", "gamma_a_units",
        "mode_volume_m3", "mode_volume_a_units", "orthogonality",
    ]
    write_csv(out / "overlap.csv", header, rows)
    write_csv(
        out / "gamma_matrix_per_m2.csv",
        ["band"] + [f"band_{b}" for b in table.bands],
        [[b] + [float(x) for x in table.gamma[i]] for i, b in enumerate(table.bands)],
    )
    for r in rows:
        print(f"bands {r[0]},{r[1]}: gamma = {r[3]:.4g} /a^2, V = {r[5]:.4g} a^3")
    return EXIT_OK


# ---------------------------------------------------------------- dispersion


def _k_values(cfg: Config) -> list[float]:
    if "dispersion.k_values" in cfg:
        try:
            return [float(v) for v in cfg.get_list("dispersion.k_values")]
        except ValueError:
            raise cfg.error("dispersion.k_values", "expected comma-separated numbers") from None
    start = cfg.get_float("dispersion.k_start")
    stop = cfg.get_float("dispersion.k_stop")
    n = cfg.get_int("dispersion.k_points")
    if n < 1:
        raise cfg.error("dispersion.k_points", "need at least one point")
    return np.linspace(start, stop, n).tolist()


def load_band_from(cfg: Config, key: str) -> disp.BandData:
    path = cfg.get_path(key)
    if not path.exists():
        raise InputError(f"{path}: band file not found (from {key})")
    try:
        return disp.load_band(path)
    except (disp.BandFileError, ValueError) as exc:
        raise InputError(str(exc)) from None


def cmd_dispersion(cfg: Config, out: Path) -> int:
    band = load_band_from(cfg, "band.file")
    header = [
        "k_pi_a", "k_rad_per_m", "omega_rad_per_s", "vg_m_per_s",
        "dvg_dk_m2_per_s", "slowdown_c_over_vg", "status",
    ]
    rows = []
    flagged = 0
    for k in _k_values(cfg):
        try:
            pt = disp.evaluate(band, k)
        except disp.OutOfBandRange:
            rows.append([k, math.nan, math.nan, math.nan, math.nan, math.nan, "out_of_range"])
            flagged += 1
            continue
        try:
            sd, status = disp.slowdown(pt), "ok"
        except disp.DegenerateBandEdge:
            sd, status = math.inf, "band_edge"
        rows.append([k, pt.k, pt.omega, pt.v_g, pt.dvg_dk, sd, status])
    write_csv(out / "dispersion.csv", header, rows)
    if flagged:
        log.warning("%d k value(s) outside the sampled range were flagged", flagged)
    print(f"wrote {len(rows)} rows to {out / 'dispersion.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------- propagate


def _dispersion_point(cfg: Config, prefix: str, carrier: CarrierSpec) -> disp.DispersionPoint:
    if f"{prefix}.band_file" in cfg:
        band = load_band_from(cfg, f"{prefix}.band_file")
        return disp.evaluate(band, cfg.get_float(f"{prefix}.k_pi_a"))
    return disp.DispersionPoint(
        k=0.0,
        omega=carrier.omega,
        v_g=cfg.get_float(f"{prefix}.vg_over_c") * C,
        dvg_dk=cfg.get_float(f"{prefix}.dvg_dk_m2_per_s", default=0.0),
    )


def _gamma_matrix(cfg: Config, band_s: int, band_p: int) -> np.ndarray:
    if "overlap.mode_files" in cfg:
        files = cfg.get_list("overlap.mode_files")
        loaded = []
        for name in files:
            p = Path(name) if Path(name).is_absolute() else cfg.base_dir / name
            try:
                loaded.append(md.load_mode(p))
            except md.ModeFileError as exc:
                raise InputError(str(exc)) from None
        table = md.overlap_table([m for m, _ in loaded], loaded[0][1])
        return np.array([
            [table.gamma_between(band_s, band_s), table.gamma_between(band_s, band_p)],
            [table.gamma_between(band_p, band_s), table.gamma_between(band_p, band_p)],
        ])
    if cfg.has_quantity("overlap.effective_area"):
        g = 1.0 / cfg.get_quantity("overlap.effective_area", "area")
        return np.full((2, 2), g)
    scale = 1.0
    suffix = "per_m2"
    if "overlap.gamma_sp_a_units" in cfg:
        scale = 1.0 / cfg.get_quantity("overlap.lattice_period", "length") ** 2
        suffix = "a_units"
    g_ss = cfg.get_float(f"overlap.gamma_ss_{suffix}") * scale
    g_sp = cfg.get_float(f"overlap.gamma_sp_{suffix}") * scale
    g_pp = cfg.get_float(f"overlap.gamma_pp_{suffix}") * scale
    return np.array([[g_ss, g_sp], [g_sp, g_pp]])


def propagation_setup(cfg: Config):
    """Build everything ``propagate`` needs from a config."""
    material = material_from(cfg)
    spec_s = pulse_from(cfg, "signal")
    spec_p = pulse_from(cfg, "probe")
    d_s = _dispersion_point(cfg, "signal", spec_s.carrier)
    d_p = _dispersion_point(cfg, "probe", spec_p.carrier)
    gamma = _gamma_matrix(cfg, spec_s.carrier.band_index, spec_p.carrier.band_index)
    if cfg.has_quantity("run.duration"):
        duration = cfg.get_quantity("run.duration", "time")
    else:
        duration = cfg.get_quantity("device.length", "length") / abs(d_p.v_g)
    frame = cfg.get_str("grid.frame", default="comoving", choices=("lab", "comoving"))
    probe_len = cfg.get_quantity("probe.length", "length", default=math.nan)
    shapes = pr.gaussian_pair(
        spec_s, spec_p, d_s.v_g, d_p.v_g, None,
        probe_length=None if math.isnan(probe_len) else probe_len,
        signal_center=cfg.get_quantity("signal.center", "length", default=0.0),
        probe_center=cfg.get_quantity("probe.center", "length", default=0.0),
    )
    v_frame_s = d_s.v_g - (d_p.v_g if frame == "comoving" else 0.0)
    v_frame_p = d_p.v_g - (d_p.v_g if frame == "comoving" else 0.0)
    excursion = max(abs(v_frame_s), abs(v_frame_p)) * duration
    length = cfg.get_quantity("grid.length", "length", default=pr.domain_length_for(shapes, excursion))
    grid = pr.EnvelopeGrid(length, cfg.get_int("grid.points", default=pr.DEFAULT_POINTS), frame)
    state = pr.init_state(
        spec_s, spec_p, shapes, grid, spec_s.carrier.band_index, spec_p.carrier.band_index
    )
    steps = cfg.get_int("solver.steps", default=-1)
    solver = pr.SolverConfig(
        dt=cfg.get_quantity("solver.dt", "time", default=math.nan) if cfg.has_quantity("solver.dt") else None,
        n_steps=None if steps < 0 else steps,
        include_gvd=cfg.get_bool("solver.include_gvd", default=False),
        include_tpa=cfg.get_bool("solver.include_tpa", default=True),
        include_linear_loss=cfg.get_bool("solver.include_linear_loss", default=True),
        snapshot_every=cfg.get_int("output.snapshot_every", default=0),
    )
    return state, solver, d_s, d_p, gamma, material, duration


def cmd_propagate(cfg: Config, out: Path) -> int:
    state, solver, d_s, d_p, gamma, material, duration = propagation_setup(cfg)
    snap_dir = out / "snapshots"
    snaps: list[pr.PulseState] = []
    if solver.snapshot_every:
        snap_dir.mkdir(parents=True, exist_ok=True)
        snaps.append(state)
    final, report = pr.propagate(
        state, solver, d_s, d_p, gamma, material, duration=duration,
        snapshot_cb=snaps.append if solver.snapshot_every else None,
    )
    for i, snap in enumerate(snaps):
        pr.write_snapshot(snap_dir / f"snapshot_{i:05d}.csv", snap)
    if snaps:
        write_csv(
            out / "snapshot_energies.csv",
            ["index", "t_s", "signal_energy_J", "probe_energy_J"],
            [[i, s.t, s.energy_s(), s.energy_p()] for i, s in enumerate(snaps)],
        )
    pairs = [
        ("phi_P_rad", report.phi_P),
        ("phi_S_rad", report.phi_S),
        ("phi_per_photon_rad", report.phi_per_photon),
        ("I_det_J", report.I_det),
        ("z_centroid_m", report.z_centroid),
        ("n_steps", report.n_steps),
        ("dt_s", report.dt),
        ("duration_s", duration),
        ("signal_energy_J", final.energy_s()),
        ("probe_energy_J", final.energy_p()),
    ]
    write_keyvalue(out / "phase_report.txt", pairs)
    write_csv(out / "phase_report.csv", [k for k, _ in pairs], [[v for _, v in pairs]])
    for k, v in pairs[:4]:
        print(f"{k} = {_fmt(v)}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep


def _axes(cfg: Config) -> list[tuple[list[str], list[float]]]:
    axes = []
    for i in itertools.count(1):
        base = f"sweep.{i}"
        if f"{base}.keys" not in cfg:
            break
        keys = cfg.get_list(f"{base}.keys")
        n = cfg.get_int(f"{base}.points")
        if n < 1:
            raise cfg.error(f"{base}.points", "sweep axis needs at least one point")
        start = cfg.get_float(f"{base}.start")
        stop = cfg.get_float(f"{base}.stop", default=start) if n == 1 else cfg.get_float(f"{base}.stop")
        scale = cfg.get_str(f"{base}.scale", default="linear", choices=("linear", "log"))
        if scale == "log":
            if start <= 0 or stop <= 0:
                raise cfg.error(f"{base}.start", "log axis needs positive bounds")
            values = np.geomspace(start, stop, n).tolist()
        else:
            values = np.linspace(start, stop, n).tolist()
        axes.append((keys, values))
    if not axes:
        raise ConfigError(f"{cfg.path}: sweep needs at least sweep.1.keys/start/stop/points")
    return axes


def _sweep_point(args):
    cfg, overrides = args
    point = cfg.copy()
    for key, value in overrides:
        point.set(key, repr(value))
    return estimate_from_config(point)


def cmd_sweep(cfg: Config, out: Path, jobs: int = 1) -> int:
    axes = _axes(cfg)
    base = cfg.copy()
    for k in list(base.keys()):
        if k.startswith("sweep."):
            del base.entries[k]
    tasks = []
    combos = list(itertools.product(*[vals for _, vals in axes]))
    for combo in combos:
        overrides = [(k, v) for (keys, _), v in zip(axes, combo) for k in keys]
        tasks.append((base, overrides))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_sweep_point, tasks))
        # key usage in worker processes is not seen here
        cfg.used.update(base.keys())
    else:
        reports = [_sweep_point(t) for t in tasks]
    axis_cols = ["axis_" + keys[0].replace(".", "_") for keys, _ in axes]
    metric_cols = [k for k, _ in reports[0].as_rows() if not k.startswith("input.")]
    rows = []
    for combo, rep in zip(combos, reports):
        metrics = [v for k, v in rep.as_rows() if not k.startswith("input.")]
        rows.append(list(combo) + metrics)
    write_csv(out / "sweep.csv", axis_cols + metric_cols, rows)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------- main


COMMANDS = {
    "estimate": (cmd_estimate, "feasibility estimate (phase per photon, probe energy, loss limits)"),
    "overlap": (cmd_overlap, "overlap factors and mode volumes from mode files"),
    "dispersion": (cmd_dispersion, "omega, v_g and GVD from a sampled band"),
    "propagate": (cmd_propagate, "integrate the coupled envelope equations"),
    "sweep": (cmd_sweep, "estimate over a grid of parameter values"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcwqnd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.add_argument("--config", required=True, type=Path, help="flat key = value config file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "sweep":
            code = func(cfg, args.out, jobs=args.jobs)
        else:
            code = func(cfg, args.out)
        for key in cfg.unused():
            log.warning("%s:%d: unused key %r", cfg.path, cfg.entries[key].line, key)
        return code
    except (ConfigError, InputError) as exc:
        print(f"pcwqnd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"pcwqnd {args.command}: error: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (pr.PropagationError, disp.DegenerateBandEdge, ArithmeticError) as exc:
        print(f"pcwqnd {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
