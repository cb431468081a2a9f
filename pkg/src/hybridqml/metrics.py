"""ROC/AUC and prediction-grid rasterisation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class UndefinedMetricError(ValueError):
    """ROC/AUC needs at least one positive and one negative label."""


@dataclass
class RocResult:
    auc: float
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # thresholds[0] is +inf, the (0, 0) corner


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean of the ranks they span."""
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    boundaries = np.flatnonzero(np.diff(sx)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(x)]])
    group_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(len(x))
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def roc_auc(scores, labels) -> RocResult:
    """AUC as P(score+ > score-) + P(tie)/2 via the Mann-Whitney rank sum, plus the ROC curve."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.shape[0]} scores but {labels.shape[0]} labels")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(len(labels) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC/AUC is undefined when only one class is present")
    ranks = average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    auc = u / (n_pos * n_neg)

    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    p = pos[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tp = np.cumsum(p)[last_of_group]
    fp = (last_of_group + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[last_of_group]]
    return RocResult(float(auc), fpr, tpr, thresholds)


def auc_score(scores, labels) -> float:
    return roc_auc(scores, labels).auc


def write_roc_csv(result: RocResult, path) -> None:
    lines = ["fpr,tpr,threshold"]
    for f, t, th in zip(result.fpr, result.tpr, result.thresholds):
        lines.append(f"{f:.9g},{t:.9g},{th:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class PredictionGrid:
    """Model probabilities at cell centres.

    ``values[i, j]`` is the prediction at ``(x1 = xs[j], x2 = ys[i])``; rows run
    along the second coordinate in ascending order. For 3-D inputs the third
    coordinate is pinned at ``slice_value``.
    """

    bounds: tuple[tuple[float, float], ...]
    resolution: int
    values: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    slice_axis: int | None = None
    slice_value: float | None = None

    @property
    def thresholded(self) -> np.ndarray:
        return self.values > 0.5


def _predictor(model):
    if callable(model):
        return model
    for name in ("predict_proba", "predict_scores"):
        if hasattr(model, name):
            return getattr(model, name)
    raise TypeError(f"{type(model).__name__} has no predict_proba/predict_scores")


def cell_centers(lo: float, hi: float, resolution: int) -> np.ndarray:
    step = (hi - lo) / resolution
    return lo + step * (np.arange(resolution) + 0.5)


def grid_points(bounds, resolution: int, slice_value: float | None = None, slice_axis: int = 2):
    """Cell-centre coordinates in the row-major order of :class:`PredictionGrid`."""
    xs = cell_centers(*bounds[0], resolution)
    ys = cell_centers(*bounds[1], resolution)
    gx, gy = np.meshgrid(xs, ys)
    cols = [gx.ravel(), gy.ravel()]
    if len(bounds) == 3:
        if slice_value is None:
            slice_value = 0.5 * (bounds[slice_axis][0] + bounds[slice_axis][1])
        cols.insert(slice_axis, np.full(gx.size, float(slice_value)))
    return np.column_stack(cols), xs, ys, slice_value


def prediction_grid(model, bounds, resolution: int = 100, slice_value: float | None = None,
                    input_dim: int | None = None) -> PredictionGrid:
    """Rasterise ``model`` over ``bounds`` (2 or 3 (min, max) pairs).

    3-D bounds produce a 2-D projection: the third coordinate is fixed at
    ``slice_value`` (default: its midpoint).
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    if len(bounds) not in (2, 3):
        raise ValueError("bounds must cover 2 or 3 dimensions")
    dim = input_dim if input_dim is not None else getattr(model, "input_dim", len(bounds))
    if dim != len(bounds):
        raise ValueError(f"model takes {dim} inputs but bounds cover {len(bounds)}")
    pts, xs, ys, sv = grid_points(bounds, resolution, slice_value)
    values = np.asarray(_predictor(model)(pts), dtype=float).reshape(resolution, resolution)
    return PredictionGrid(bounds, resolution, values, xs, ys,
                          2 if len(bounds) == 3 else None, sv)


def write_pgm(grid: PredictionGrid, path) -> None:
    """Plain (P2) 8-bit PGM with value round(255 p); the top image row is the largest x2."""
    r = grid.resolution
    pix = np.rint(255 * np.clip(grid.values, 0.0, 1.0)).astype(int)[::-1]
    rows = [" ".join(map(str, row)) for row in pix]
    Path(path).write_text(f"P2 {r} {r} 255\n" + "\n".join(rows) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, maxval = map(int, tokens[1:4])
    return np.array(tokens[4:4 + w * h], dtype=int).reshape(h, w)


def write_grid_csv(grid: PredictionGrid, path) -> None:
    lines = ["x1,x2,p"]
    for i, y in enumerate(grid.ys):
        for j, x in enumerate(grid.xs):
            lines.append(f"{x:.9g},{y:.9g},{grid.values[i, j]:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")
