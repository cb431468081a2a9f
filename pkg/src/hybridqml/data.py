"""Synthetic non-convex datasets with one-sided Gaussian noise.

Points are drawn uniformly from the box ``[-pi/2, pi/2]^d`` so raw coordinates
can go straight into rotation gates. Label 1 means "inside the shape".

* ``crescent2d``: a disc with an overlapping smaller disc cut out of it.
* ``triple2d``: three disjoint discs on the vertices of a triangle.
* ``triple3d``: three disjoint balls near alternate corners of the cube.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

HALF_WIDTH = np.pi / 2


@dataclass(frozen=True)
class ShapeSpec:
    shape_id: str
    dim: int
    centers: tuple[tuple[float, ...], ...]
    radii: tuple[float, ...]
    # crescent: first ball minus the second; union: any ball
    kind: str = "union"

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return ((-HALF_WIDTH, HALF_WIDTH),) * self.dim

    def contains(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"{self.shape_id} expects (N, {self.dim}) points, got shape {X.shape}")
        inside = [((X - np.asarray(c)) ** 2).sum(axis=1) <= r * r for c, r in zip(self.centers, self.radii)]
        if self.kind == "crescent":
            return inside[0] & ~inside[1]
        return np.logical_or.reduce(inside)

    def label(self, X) -> np.ndarray:
        return self.contains(X).astype(int)


_TRIANGLE = tuple(
    (0.9 * float(np.cos(a)), 0.9 * float(np.sin(a))) for a in np.deg2rad([90.0, 210.0, 330.0])
)

SHAPES = {
    "crescent2d": ShapeSpec("crescent2d", 2, ((0.0, 0.0), (0.55, 0.0)), (1.35, 1.0), "crescent"),
    "triple2d": ShapeSpec("triple2d", 2, _TRIANGLE, (0.55, 0.55, 0.55)),
    "triple3d": ShapeSpec(
        "triple3d", 3, ((-0.7, -0.7, -0.7), (0.7, 0.7, -0.7), (0.7, -0.7, 0.7)), (0.85, 0.85, 0.85)
    ),
}


def get_shape(shape) -> ShapeSpec:
    if isinstance(shape, ShapeSpec):
        return shape
    try:
        return SHAPES[shape]
    except KeyError:
        raise ValueError(f"unknown shape {shape!r}; expected one of {', '.join(SHAPES)}") from None


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"X shape {self.X.shape} does not match {self.y.shape[0]} labels")

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def generate(shape, n_points: int, seed=None, max_tries: int = 100) -> LabeledDataset:
    """Uniform points over the shape's box labelled by membership; redrawn until both
    classes appear (when ``n_points >= 2``)."""
    spec = get_shape(shape)
    if n_points < 2:
        raise ValueError(f"need at least 2 points, got {n_points}")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        X = rng.uniform(-HALF_WIDTH, HALF_WIDTH, size=(n_points, spec.dim))
        y = spec.label(X)
        if 0 < y.sum() < n_points:
            break
    else:
        raise RuntimeError(f"could not draw both classes of {spec.shape_id} in {max_tries} tries")
    meta = {"shape_id": spec.shape_id, "noise_sigma": 0.0, "seed": seed, "split_tag": "full"}
    return LabeledDataset(X, y, meta)


def apply_class_noise(ds: LabeledDataset, sigma: float, seed=None, noisy_class: int = 1) -> LabeledDataset:
    """Add N(0, sigma^2) to every coordinate of the ``noisy_class`` rows; labels stay put."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    X = ds.X.copy()
    if sigma > 0:
        rows = ds.y == noisy_class
        rng = np.random.default_rng(seed)
        X[rows] += rng.normal(0.0, sigma, size=(int(rows.sum()), X.shape[1]))
    return LabeledDataset(X, ds.y.copy(), {**ds.meta, "noise_sigma": float(sigma)})


def split(ds: LabeledDataset, fraction: float = 0.5, seed=None) -> tuple[LabeledDataset, LabeledDataset]:
    """Shuffle, then the first ``floor(fraction * N)`` rows train and the rest test."""
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie strictly between 0 and 1, got {fraction}")
    n = len(ds)
    n_train = int(np.floor(fraction * n))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} points at fraction {fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    tr, te = perm[:n_train], perm[n_train:]
    return (
        LabeledDataset(ds.X[tr], ds.y[tr], {**ds.meta, "split_tag": "train"}),
        LabeledDataset(ds.X[te], ds.y[te], {**ds.meta, "split_tag": "test"}),
    )


def make_splits(shape, n_points: int, sigma: float, fraction: float = 0.5, seed=0,
                noisy_class: int = 1) -> tuple[LabeledDataset, LabeledDataset]:
    """Generate, add noise, split; the three steps use independent child seeds."""
    s_data, s_noise, s_split = np.random.SeedSequence(seed).spawn(3)
    ds = generate(shape, n_points, s_data)
    ds = apply_class_noise(ds, sigma, s_noise, noisy_class)
    return split(ds, fraction, s_split)


def write_csv(ds: LabeledDataset, path) -> None:
    names = [f"x{i + 1}" for i in range(ds.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["label"])
        for row, label in zip(ds.X, ds.y):
            w.writerow([f"{v:.9g}" for v in row] + [int(label)])


def read_csv(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if header[-1] != "label" or header[:-1] not in (["x1", "x2"], ["x1", "x2", "x3"]):
        raise ValueError(f"{path}: unexpected header {','.join(header)}")
    body = np.array(rows[1:], dtype=float).reshape(-1, len(header))
    return LabeledDataset(body[:, :-1], body[:, -1].astype(int), {"source": str(path)})


def relabel(ds: LabeledDataset, shape) -> LabeledDataset:
    return replace(ds, y=get_shape(shape).label(ds.X))
