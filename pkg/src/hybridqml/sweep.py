"""Experiment sweeps over (model, shape, noise, seed) cells.

Each cell derives its own seeds from the master seed and a hash of the cell
identity, so results never depend on which worker ran a cell or in what order.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines, metrics
from .config import ExperimentConfig, ModelSpec
from .data import SHAPES, make_splits
from .qmodels import TrainConfig, build, train

RESULT_FIELDS = ("model", "shape", "noise_sigma", "seed", "B", "L", "n_qubits", "batch",
                 "epochs_run", "best_auc", "best_epoch", "wall_time_s")

DEFAULT_ROSTER = (
    ModelSpec("drc", B=6),
    ModelSpec("vc", L=6),
    ModelSpec("vcdrc", B=6, L=1),
    ModelSpec("qnode", B=6, L=1),
    ModelSpec("fh_vcdrc_nn", B=6, L=1),
    ModelSpec("fh_nn_vcdrc", B=6, L=1),
)
BASELINE_ROSTER = tuple(ModelSpec(k) for k in baselines.BASELINES)
ROSTER_3D = (
    ModelSpec("vc", L=6),
    ModelSpec("vcdrc", B=6, L=1),
    ModelSpec("qnode", B=6, L=1),
    ModelSpec("fh_vcdrc_nn", B=6, L=1),
    ModelSpec("fh_nn_vcdrc", B=6, L=1),
    ModelSpec("mlpc"),
)


def derive_seed(master: int, *parts) -> int:
    """A 63-bit seed from the master seed and a stable hash of ``parts``."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    ss = np.random.SeedSequence([int(master), int.from_bytes(digest, "little")])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def fmt_sigma(sigma: float) -> str:
    return format(float(sigma), "g")


@dataclass(frozen=True)
class Cell:
    spec: ModelSpec
    shape: str
    sigma: float
    seed: int

    @property
    def stem(self) -> str:
        return f"{self.spec.name}_{self.shape}_n{fmt_sigma(self.sigma)}_s{self.seed}"

    @property
    def key(self) -> tuple:
        s = self.spec
        return (s.name, s.kind, s.n_qubits, s.B, s.L, s.epochs, s.hyper, self.shape,
                float(self.sigma), self.seed)


@dataclass
class CellResult:
    cell: Cell
    row: dict
    history: dict | None = None
    model: dict | None = None
    grid: metrics.PredictionGrid | None = None


@dataclass
class SweepReport:
    results: list[CellResult] = field(default_factory=list)

    @property
    def rows(self) -> list[dict]:
        return [r.row for r in self.results]


def _dim(shape: str) -> int:
    return SHAPES[shape].dim


def run_cell(cell: Cell, cfg: ExperimentConfig, want_grid: bool = False,
             keep_model: bool = False) -> CellResult:
    spec = cell.spec
    data_seed = derive_seed(cfg.master_seed, "data", cell.shape, cfg.n_points, cfg.split_fraction,
                            cfg.noisy_class, cell.seed)
    train_set, test_set = make_splits(cell.shape, cfg.n_points, cell.sigma, cfg.split_fraction,
                                      data_seed, cfg.noisy_class)
    init_seed = derive_seed(cfg.master_seed, "init", *cell.key)
    start = time.perf_counter()
    d = _dim(cell.shape)
    history = model_dict = None
    if spec.is_baseline:
        hyper = dict(spec.hyper)
        if spec.epochs is not None and "epochs" in baselines.DEFAULTS[spec.kind]:
            hyper["epochs"] = spec.epochs
        fitted = baselines.fit(spec.kind, train_set, hyper, seed=init_seed)
        best_auc = metrics.auc_score(fitted.predict_scores(test_set.X), test_set.y)
        epochs = baselines.epochs_of(spec.kind, hyper)
        batch = hyper.get("batch_size", baselines.DEFAULTS[spec.kind].get("batch_size", 0))
        row_b = row_l = row_q = 0
        best_epoch = epochs
        predictor = fitted.predict_scores
    else:
        model = build(spec.kind, n_features=d, n_qubits=spec.n_qubits, B=spec.B, L=spec.L,
                      seed=init_seed)
        epochs = cfg.epochs if spec.epochs is None else spec.epochs
        tc = TrainConfig(epochs, cfg.batch_size, cfg.lr,
                         seed=derive_seed(cfg.master_seed, "shuffle", *cell.key))
        rep = train(model, train_set, test_set, tc)
        best_auc, best_epoch, batch = rep.best_auc, rep.best_epoch, cfg.batch_size
        row_q = model.hyper["n_qubits"]
        row_b, row_l = model.hyper["B"], model.hyper["L"]
        history = {"train_auc": rep.train_auc, "test_auc": rep.test_auc, "loss": rep.loss}
        if keep_model:
            model_dict = model.to_dict(shape=cell.shape, noise_sigma=cell.sigma, seed=cell.seed,
                                       name=spec.name)
        predictor = model.predict_proba
    grid = None
    if want_grid:
        grid = metrics.prediction_grid(predictor, SHAPES[cell.shape].bounds, cfg.grid_resolution,
                                       input_dim=d)
    wall = time.perf_counter() - start
    row = {
        "model": spec.name, "shape": cell.shape, "noise_sigma": float(cell.sigma), "seed": cell.seed,
        "B": row_b, "L": row_l, "n_qubits": row_q, "batch": batch, "epochs_run": epochs,
        "best_auc": float(best_auc), "best_epoch": int(best_epoch),
        "wall_time_s": wall,
    }
    return CellResult(cell, row, history, model_dict, grid)


def _run_cell_star(args):
    return run_cell(*args)


def run_cells(cells: list[Cell], cfg: ExperimentConfig, jobs: int | None = None,
              want_grid: bool = False, keep_model: bool = False) -> SweepReport:
    """Run cells (deduplicated, in order) serially or on a process pool."""
    seen, unique = set(), []
    for c in cells:
        if c.key not in seen:
            seen.add(c.key)
            unique.append(c)
    args = [(c, cfg, want_grid, keep_model) for c in unique]
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(args) <= 1:
        results = [_run_cell_star(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            results = list(pool.map(_run_cell_star, args))
    return SweepReport(results)


def noise_cells(cfg: ExperimentConfig, models=None, shape: str | None = None) -> list[Cell]:
    models = cfg.models if models is None else models
    if not models:
        raise ValueError("the model list is empty")
    shape = shape or cfg.shape_id
    return [Cell(m, shape, float(s), seed) for m in models for s in cfg.noise_grid for seed in cfg.seeds]


def block_cells(cfg: ExperimentConfig, shape: str | None = None) -> list[Cell]:
    if not cfg.blocks:
        raise ValueError("the block list is empty")
    shape = shape or cfg.shape_id
    return [Cell(ModelSpec(kind, B=b, L=1), shape, float(s), seed)
            for kind in cfg.block_models for b in cfg.blocks
            for s in cfg.noise_grid for seed in cfg.seeds]


def bench_all_cells(cfg: ExperimentConfig) -> list[Cell]:
    """Every 2-D noise sweep, the NN ablation, the block sweep and the 3-D benchmark."""
    roster = list(cfg.models) if cfg.models else [
        *DEFAULT_ROSTER,
        ModelSpec("nn", name=f"nn{cfg.epochs}", epochs=cfg.epochs),
        ModelSpec("nn", name=f"nn{cfg.long_epochs}", epochs=cfg.long_epochs),
        *BASELINE_ROSTER,
    ]
    cells = []
    for shape in ("crescent2d", "triple2d"):
        cells += noise_cells(cfg, roster, shape)
    cells += block_cells(cfg, "crescent2d")
    cells += noise_cells(cfg, ROSTER_3D, "triple3d")
    return cells


def run_sweep(cfg: ExperimentConfig, jobs: int | None = None, keep_model: bool = False) -> SweepReport:
    return run_cells(noise_cells(cfg), cfg, jobs, cfg.grid_enabled, keep_model)


def run_block_sweep(cfg: ExperimentConfig, jobs: int | None = None) -> SweepReport:
    return run_cells(block_cells(cfg), cfg, jobs, cfg.grid_enabled)


# ---------------------------------------------------------------- output

def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_row(row: dict, record_wall_time: bool) -> str:
    vals = [
        row["model"], row["shape"], fmt_sigma(row["noise_sigma"]), str(row["seed"]),
        str(row["B"]), str(row["L"]), str(row["n_qubits"]), str(row["batch"]),
        str(row["epochs_run"]), f"{row['best_auc']:.8f}", str(row["best_epoch"]),
        f"{row['wall_time_s']:.3f}" if record_wall_time else "",
    ]
    return ",".join(vals)


def results_csv(report: SweepReport, record_wall_time: bool = False) -> str:
    lines = [",".join(RESULT_FIELDS)] + [format_row(r, record_wall_time) for r in report.rows]
    return "\n".join(lines) + "\n"


def write_results(report: SweepReport, out_dir, record_wall_time: bool = False) -> Path:
    path = Path(out_dir) / "results.csv"
    atomic_write(path, results_csv(report, record_wall_time))
    return path


def write_grids(report: SweepReport, out_dir) -> list[Path]:
    written = []
    grid_dir = Path(out_dir) / "grids"
    for res in report.results:
        if res.grid is None:
            continue
        written += emit_grid(res.grid, grid_dir, f"grid_{res.cell.stem}")
    return written


def emit_grid(grid: metrics.PredictionGrid, grid_dir, stem: str) -> list[Path]:
    grid_dir = Path(grid_dir)
    grid_dir.mkdir(parents=True, exist_ok=True)
    pgm, csv_path = grid_dir / f"{stem}.pgm", grid_dir / f"{stem}.csv"
    for path, writer in ((pgm, metrics.write_pgm), (csv_path, metrics.write_grid_csv)):
        tmp = path.with_name(f".{path.name}.tmp")
        writer(grid, tmp)
        os.replace(tmp, path)
    out = [pgm, csv_path]
    if grid.slice_axis is not None:
        side = grid_dir / f"{stem}.slice.txt"
        atomic_write(side, f"axis=x{grid.slice_axis + 1}\nvalue={grid.slice_value:.9g}\n")
        out.append(side)
    return out


def history_csv(history: dict) -> str:
    lines = ["epoch,train_auc,test_auc,loss"]
    for i, (a, b, c) in enumerate(zip(history["train_auc"], history["test_auc"], history["loss"])):
        lines.append(f"{i},{a:.8f},{b:.8f},{c:.8f}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
