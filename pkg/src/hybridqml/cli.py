"""Command-line entry point: ``hybridqml <command> --config run.toml``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import data, metrics, sweep
from .config import ConfigError, ExperimentConfig, load_config
from .qmodels import load_model

log = logging.getLogger("hybridqml")

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir '{out}' cannot be created: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output_dir '{out}' is not writable")
    return out


def _summarise(report: sweep.SweepReport) -> None:
    for row in report.rows:
        log.info("%-22s %-10s sigma=%-4s seed=%d  best_auc=%.4f (epoch %d)", row["model"], row["shape"],
                 sweep.fmt_sigma(row["noise_sigma"]), row["seed"], row["best_auc"], row["best_epoch"])


def cmd_gen_data(cfg: ExperimentConfig, out: Path, jobs) -> None:
    data_dir = out / "data"
    data_dir.mkdir(exist_ok=True)
    for seed in cfg.seeds:
        ds_seed = sweep.derive_seed(cfg.master_seed, "data", cfg.shape_id, cfg.n_points,
                                    cfg.split_fraction, cfg.noisy_class, seed)
        for sigma in cfg.noise_grid:
            tr, te = data.make_splits(cfg.shape_id, cfg.n_points, sigma, cfg.split_fraction, ds_seed,
                                      cfg.noisy_class)
            stem = f"{cfg.shape_id}_n{sweep.fmt_sigma(sigma)}_s{seed}"
            for part, ds in (("train", tr), ("test", te)):
                path = data_dir / f"{stem}_{part}.csv"
                tmp = path.with_name(f".{path.name}.tmp")
                data.write_csv(ds, tmp)
                os.replace(tmp, path)
            log.info("wrote %s_{train,test}.csv", stem)


def cmd_train(cfg, out, jobs) -> None:
    report = sweep.run_cells(sweep.noise_cells(cfg), cfg, jobs, cfg.grid_enabled, keep_model=True)
    for res in report.results:
        if res.model is not None:
            sweep.atomic_write(out / "models" / f"{res.cell.stem}.json", json.dumps(res.model, indent=1) + "\n")
            sweep.atomic_write(out / "history" / f"{res.cell.stem}.csv", sweep.history_csv(res.history))
    sweep.write_grids(report, out)
    sweep.write_results(report, out, cfg.record_wall_time)
    _summarise(report)


def cmd_sweep_noise(cfg, out, jobs) -> None:
    report = sweep.run_sweep(cfg, jobs)
    sweep.write_grids(report, out)
    sweep.write_results(report, out, cfg.record_wall_time)
    _summarise(report)


def cmd_sweep_blocks(cfg, out, jobs) -> None:
    report = sweep.run_block_sweep(cfg, jobs)
    sweep.write_grids(report, out)
    sweep.write_results(report, out, cfg.record_wall_time)
    _summarise(report)


def cmd_grids(cfg, out, jobs) -> None:
    """Rasterise every model saved by ``train`` under ``<out>/models``."""
    model_dir = out / "models"
    files = sorted(model_dir.glob("*.json"))
    if not files:
        raise RuntimeError(f"no saved models in {model_dir}; run 'train' first")
    for path in files:
        model, meta = load_model(path)
        shape = data.get_shape(meta.get("shape", cfg.shape_id))
        grid = metrics.prediction_grid(model, shape.bounds, cfg.grid_resolution)
        sweep.emit_grid(grid, out / "grids", f"grid_{path.stem}")
        log.info("grid for %s", path.stem)


def cmd_bench_all(cfg, out, jobs) -> None:
    report = sweep.run_cells(sweep.bench_all_cells(cfg), cfg, jobs, cfg.grid_enabled)
    sweep.write_grids(report, out)
    sweep.write_results(report, out, cfg.record_wall_time)
    _summarise(report)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sweep-noise": cmd_sweep_noise,
    "sweep-blocks": cmd_sweep_blocks,
    "grids": cmd_grids,
    "bench-all": cmd_bench_all,
}
NEEDS_MODELS = {"train", "sweep-noise"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridqml", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML experiment file")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--out", default=None, help="override output_dir")
    parser.add_argument("--wall-time", action="store_true",
                        help="fill wall_time_s in results.csv (makes the file non-reproducible)")
    parser.add_argument("-q", "--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        cfg = sweep.with_overrides(cfg, master_seed=args.seed, output_dir=args.out,
                                   record_wall_time=True if args.wall_time else None)
        if args.command in NEEDS_MODELS and not cfg.models:
            raise ConfigError("models list is empty; add at least one [[models]] table", path=args.config)
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = _prepare_out(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](cfg, out, args.jobs)
    except Exception as exc:  # noqa: BLE001 - the CLI reports every failure as exit 3
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
