"""Command-line entry point.

Exit status: 0 on success, 1 for usage or configuration errors, 2 for
runtime or numerical failures.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .bench import SweepTable, crlb_single_tone, run_scene, run_sweep, score_scene, summarize_scene
from .config import RunConfig, load_config
from .errors import ConfigError, TomoAnmError
from .estimators.registry import ALGORITHMS, run_estimator
from .spectral import LineSpectrum
from .tomosar import elevation_from_freq, reconstruct_volume, simulate_building_scene

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _algos(text: str) -> tuple:
    names = tuple(a.strip() for a in text.split(",") if a.strip())
    if not names:
        raise argparse.ArgumentTypeError("expected a comma-separated list of algorithms")
    for a in names:
        if a not in ALGORITHMS:
            raise argparse.ArgumentTypeError(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    return names


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _snr(text: str) -> Optional[float]:
    if text.lower() == "none":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number or 'none', got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")

    parser = _Parser(prog="tomoanm", description="Gridless TomoSAR spectral estimation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="simulate a building scene stack")
    p.add_argument("--snr", type=_snr, help="per-pixel SNR in dB, or 'none' for noiseless")
    p.add_argument("--noiseless", action="store_true")

    p = sub.add_parser("estimate", parents=[common], help="estimate the spectrum of one pixel")
    p.add_argument("--stack", type=Path, help="SLC stack file; otherwise the configured pixel")
    p.add_argument("--azimuth", type=int, default=0)
    p.add_argument("--range", dest="range_bin", type=int, default=0)
    p.add_argument("--algos", type=_algos, help="comma-separated algorithms")
    p.add_argument("-k", type=int, help="model order")

    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct a point cloud per algorithm")
    p.add_argument("--stack", type=Path, required=True)
    p.add_argument("--truth", type=Path, help="truth CSV to score against")
    p.add_argument("--algos", type=_algos)
    p.add_argument("--k-max", type=int)
    p.add_argument("--amplitude-floor", type=float)

    p = sub.add_parser("sweep", parents=[common], help="Monte-Carlo sweep to CSV and gnuplot script")
    p.add_argument("--kind", choices=("snr", "elements", "sparseness", "scene"))
    p.add_argument("--trials", type=int)
    p.add_argument("--algos", type=_algos)
    p.add_argument("--grid", type=_floats, help="comma-separated grid values")
    p.add_argument("--no-timing", action="store_true",
                   help="write zero runtimes so reruns are byte-identical")

    p = sub.add_parser("crlb", parents=[common], help="print the single-tone CRLB table")
    p.add_argument("-n", type=int, help="number of elements")
    p.add_argument("--snr", type=_floats, default=tuple(float(s) for s in range(-10, 41, 5)))
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output=replace(cfg.output, directory=str(args.out)))
    return cfg


def _prepare_output(cfg: RunConfig) -> None:
    Path(cfg.output.directory).mkdir(parents=True, exist_ok=True)


def _print_spectrum(algorithm: str, spec: LineSpectrum, geom) -> None:
    for f, c in zip(spec.frequencies.tolist(), spec.amplitudes.tolist()):
        print(f"{algorithm},{f!r},{elevation_from_freq(f, geom)!r},{c.real!r},{c.imag!r}")


def cmd_simulate(args, cfg: RunConfig) -> int:
    scene_cfg = cfg.scene
    if args.noiseless:
        scene_cfg = replace(scene_cfg, snr_db=None)
    elif args.snr is not None:
        scene_cfg = replace(scene_cfg, snr_db=args.snr)
    scene = simulate_building_scene(scene_cfg, seed=cfg.seed)
    _prepare_output(cfg)
    stack_path, truth_path = cfg.output.path("_stack.tsar"), cfg.output.path("_truth.csv")
    io.write_slc_stack(scene.stack, stack_path)
    io.write_truth_csv(scene.truth, truth_path)
    print(f"wrote {stack_path} and {truth_path}")
    return EXIT_OK


def cmd_estimate(args, cfg: RunConfig) -> int:
    geom = cfg.geometry
    k = args.k if args.k is not None else cfg.estimator.k
    if args.stack is not None:
        geom = replace(geom, n_elements=_channels(args.stack))
        stack = io.read_slc_stack(args.stack, geom)
        _, n_az, n_rg = stack.shape
        if not (0 <= args.azimuth < n_az and 0 <= args.range_bin < n_rg):
            raise ConfigError(f"pixel ({args.azimuth}, {args.range_bin}) outside the {n_az}x{n_rg} stack")
        g = stack.pixel(args.azimuth, args.range_bin)
    else:
        px = cfg.pixel
        g = LineSpectrum(px.frequencies, px.amplitudes).synthesize(geom.n_elements)
        if px.snr_db is not None:
            rng = np.random.default_rng(cfg.seed)
            power = float(np.sum(np.abs(px.amplitudes) ** 2))
            w = rng.standard_normal((geom.n_elements, 2))
            g = g + np.sqrt(power / 10 ** (px.snr_db / 10) / 2) * (w[:, 0] + 1j * w[:, 1])
    if not 1 <= k < g.size:
        raise ConfigError(f"k must lie in [1, {g.size - 1}], got {k}")
    print("algorithm,frequency,elevation_m,re,im")
    for a in args.algos or (cfg.estimator.algorithm,):
        _print_spectrum(a, run_estimator(a, g, k, cfg.estimator.config_for(a)), geom)
    return EXIT_OK


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    stack = io.read_slc_stack(args.stack, replace(cfg.geometry, n_elements=_channels(args.stack)))
    k_max = args.k_max if args.k_max is not None else cfg.k_max
    floor = args.amplitude_floor if args.amplitude_floor is not None else cfg.amplitude_floor
    truth = None
    if args.truth is not None:
        truth = io.read_truth_csv(args.truth, stack.shape[1], stack.shape[2])
    _prepare_output(cfg)
    for a in args.algos or ("ivdst", "omp", "ist"):
        conf = cfg.estimator.config_for(a)
        rec = reconstruct_volume(stack, a, conf, k_max=k_max, amplitude_floor=floor,
                                 azimuth_spacing=cfg.scene.azimuth_spacing,
                                 ground_range_spacing=cfg.scene.ground_range_spacing)
        path = cfg.output.path(f"_{a}.ply")
        io.write_point_cloud_ply(rec.cloud, path)
        line = f"{a}: {len(rec.cloud)} points, {rec.diagnostics.failed} failed pixels -> {path}"
        if truth is not None:
            score = score_scene(rec.cloud, truth, stack.geometry)
            line += (f"; height RMSE {score.rmse_m:.4g} m, missed {score.missed}, "
                     f"spurious {score.spurious}")
        print(line)
    return EXIT_OK


def _channels(path) -> int:
    with open(path, "rb") as fh:
        head = fh.read(io.HEADER.size)
    if len(head) < io.HEADER.size:
        return 2  # let the reader report the truncation
    return max(2, io.HEADER.unpack(head)[2])


def cmd_sweep(args, cfg: RunConfig) -> int:
    sweep = cfg.sweep
    changes = {}
    if args.kind is not None and args.kind != sweep.kind:
        changes.update(kind=args.kind, grid=None)
    if args.grid is not None:
        changes["grid"] = args.grid
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.algos is not None:
        changes["algorithms"] = args.algos
    if changes:
        try:
            sweep = replace(sweep, **changes)
        except (TomoAnmError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    _prepare_output(cfg)
    if sweep.kind == "scene":
        runs = run_scene(sweep, cfg.seed)
        for per_grid in runs:
            for r in per_grid:
                io.write_point_cloud_ply(r.cloud, cfg.output.path(f"_scene_{r.algorithm}.ply"))
        table = summarize_scene(sweep, runs)
    else:
        table = run_sweep(sweep, cfg.seed)
    if args.no_timing:
        table = SweepTable(table.kind, tuple(r._replace(runtime_mean_s=0.0, runtime_median_s=0.0)
                                             for r in table.rows))
    csv_path = cfg.output.path(f"_{sweep.kind}.csv")
    io.write_sweep_csv(table, csv_path)
    print(f"wrote {csv_path}")
    if sweep.kind != "scene":
        plot_path = cfg.output.path(f"_{sweep.kind}.gp")
        io.emit_plot_script(table, sweep.kind, plot_path, csv_path.name, sweep.n_elements)
        print(f"wrote {plot_path}")
    return EXIT_OK


def cmd_crlb(args, cfg: RunConfig) -> int:
    n = args.n if args.n is not None else cfg.geometry.n_elements
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    print("snr_db,variance,rmse")
    for snr in args.snr:
        var = crlb_single_tone(n, snr)
        print(f"{snr!r},{var!r},{float(np.sqrt(var))!r}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "reconstruct": cmd_reconstruct,
            "sweep": cmd_sweep, "crlb": cmd_crlb}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, _config(args))
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"tomoanm: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TomoAnmError, np.linalg.LinAlgError, ArithmeticError, OSError) as exc:
        print(f"tomoanm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
