"""Classical baselines: KNN, CART tree, random forest, QDA, logistic regression, MLP.

Every fitted model exposes ``predict_scores(X)`` returning class-1 scores in
[0, 1]. Defaults:

* KNN: k=5, Euclidean, score = fraction of positive neighbours
* DecisionTree: Gini, max depth 8, min leaf 5, score = leaf positive fraction
* RandomForest: 100 bootstrapped trees, floor(sqrt(d)) features per split
* QDA: per-class Gaussian with covariance + 1e-6 I
* LogisticRegression: one sigmoid neuron, Adam on BCE, 100 epochs
* MLPC: Dense(d->16 ReLU) -> Dense(16->16 ReLU) -> Dense(16->1 sigmoid), 200 epochs
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import DenseLayer
from .qmodels import HybridModel, fit_epochs

BASELINES = ("knn", "decision_tree", "random_forest", "qda", "logistic_regression", "mlpc")

DEFAULTS = {
    "knn": {"k": 5},
    "decision_tree": {"max_depth": 8, "min_leaf": 5, "max_features": None},
    "random_forest": {"n_trees": 100, "max_depth": 8, "min_leaf": 5, "max_features": "sqrt",
                      "bootstrap": True},
    "qda": {"reg": 1e-6},
    "logistic_regression": {"epochs": 100, "batch_size": 32, "lr": 0.01},
    "mlpc": {"hidden": 16, "epochs": 200, "batch_size": 32, "lr": 0.01},
}


def _check_X(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected an (N, {dim}) matrix, got shape {X.shape}")
    return X


# ---------------------------------------------------------------- KNN

@dataclass
class KNN:
    X: np.ndarray
    y: np.ndarray
    k: int = 5
    chunk: int = 512

    def predict_scores(self, X) -> np.ndarray:
        X = _check_X(X, self.X.shape[1])
        k = min(self.k, self.X.shape[0])
        sq_train = (self.X ** 2).sum(axis=1)
        out = np.empty(X.shape[0])
        for lo in range(0, X.shape[0], self.chunk):
            q = X[lo:lo + self.chunk]
            d2 = (q ** 2).sum(axis=1)[:, None] - 2.0 * q @ self.X.T + sq_train[None, :]
            # stable sort keeps the lowest training index among equal distances
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            out[lo:lo + len(q)] = self.y[nearest].mean(axis=1)
        return out


# ---------------------------------------------------------------- trees

def _best_split(X: np.ndarray, y: np.ndarray, features, min_leaf: int):
    """Lowest weighted Gini split over ``features``; None if nothing beats the parent."""
    n = y.shape[0]
    n_pos = y.sum()
    parent = 1.0 - (n_pos / n) ** 2 - (1 - n_pos / n) ** 2
    best = (parent - 1e-12, None, None)
    counts = np.arange(1, n)
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left_pos = np.cumsum(y[order])[:-1]
        right_pos = n_pos - left_pos
        n_left = counts
        n_right = n - counts
        pl = left_pos / n_left
        pr = right_pos / n_right
        gini = (n_left * 2 * pl * (1 - pl) + n_right * 2 * pr * (1 - pr)) / n
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        gini = np.where(valid, gini, np.inf)
        i = int(np.argmin(gini))
        if gini[i] < best[0]:
            best = (gini[i], f, 0.5 * (xs[i] + xs[i + 1]))
    return best[1], best[2]


@dataclass
class DecisionTree:
    """CART tree stored as flat node arrays; leaves have ``feature == -1``."""

    max_depth: int = 8
    min_leaf: int = 5
    max_features: int | None = None
    dim: int = 0
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)

    def fit(self, X, y, rng: np.random.Generator | None = None) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a tree on an empty set")
        self.dim = X.shape[1]
        n_feat = self.dim if self.max_features is None else min(self.max_features, self.dim)
        rng = rng or np.random.default_rng(0)
        stack = [(np.arange(X.shape[0]), 0, self._new_node(y.mean()))]
        while stack:
            idx, depth, node = stack.pop()
            ys = y[idx]
            if depth >= self.max_depth or len(idx) < 2 * self.min_leaf or ys.min() == ys.max():
                continue
            if n_feat == self.dim:
                features = range(self.dim)
            else:
                features = np.sort(rng.choice(self.dim, size=n_feat, replace=False))
            f, t = _best_split(X[idx], ys, features, self.min_leaf)
            if f is None:
                continue
            go_left = X[idx, f] <= t
            li, ri = idx[go_left], idx[~go_left]
            self.feature[node], self.threshold[node] = int(f), float(t)
            self.left[node] = self._new_node(y[li].mean())
            self.right[node] = self._new_node(y[ri].mean())
            stack.append((ri, depth + 1, self.right[node]))
            stack.append((li, depth + 1, self.left[node]))
        for name in ("feature", "left", "right"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=int))
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        return self

    def _new_node(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.value) - 1

    def predict_scores(self, X) -> np.ndarray:
        X = _check_X(X, self.dim)
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                return self.value[node]
            r = rows[internal]
            n = node[internal]
            go_left = X[r, f[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    @property
    def depth(self) -> int:
        def d(i):
            return 0 if self.feature[i] < 0 else 1 + max(d(self.left[i]), d(self.right[i]))
        return d(0)


@dataclass
class RandomForest:
    trees: list

    def predict_scores(self, X) -> np.ndarray:
        return np.mean([t.predict_scores(X) for t in self.trees], axis=0)


def fit_forest(X, y, n_trees=100, max_depth=8, min_leaf=5, max_features="sqrt", bootstrap=True,
               seed=0) -> RandomForest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    if max_features == "sqrt":
        max_features = max(1, int(np.sqrt(d)))
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, X.shape[0], X.shape[0]) if bootstrap else np.arange(X.shape[0])
        tree = DecisionTree(max_depth, min_leaf, max_features)
        trees.append(tree.fit(X[idx], y[idx], rng))
    return RandomForest(trees)


# ---------------------------------------------------------------- QDA

@dataclass
class QDA:
    means: np.ndarray      # (2, d)
    precisions: np.ndarray  # (2, d, d)
    log_norm: np.ndarray   # (2,) log prior - 0.5 log det cov

    def predict_scores(self, X) -> np.ndarray:
        X = _check_X(X, self.means.shape[1])
        ll = []
        for c in (0, 1):
            diff = X - self.means[c]
            ll.append(self.log_norm[c] - 0.5 * np.einsum("ni,ij,nj->n", diff, self.precisions[c], diff))
        z = ll[1] - ll[0]
        return 0.5 * (1.0 + np.tanh(0.5 * z))


def fit_qda(X, y, reg: float = 1e-6) -> QDA:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    d = X.shape[1]
    means, precs, log_norm = [], [], []
    for c in (0, 1):
        Xc = X[y == c]
        if len(Xc) == 0:
            raise ValueError(f"QDA: class {c} has no training samples")
        if len(Xc) < d + 1:
            raise ValueError(f"QDA: class {c} has {len(Xc)} samples, needs at least {d + 1}")
        cov = np.cov(Xc, rowvar=False).reshape(d, d) + reg * np.eye(d)
        means.append(Xc.mean(axis=0))
        precs.append(np.linalg.inv(cov))
        log_norm.append(np.log(len(Xc) / len(X)) - 0.5 * np.linalg.slogdet(cov)[1])
    return QDA(np.array(means), np.array(precs), np.array(log_norm))


# ---------------------------------------------------------------- neural baselines

@dataclass
class NeuralBaseline:
    model: HybridModel

    def predict_scores(self, X) -> np.ndarray:
        return self.model.predict_proba(X)


def _dense_model(name, dims, activations, seed) -> HybridModel:
    layers = [DenseLayer(i, o, a) for i, o, a in zip(dims[:-1], dims[1:], activations)]
    return HybridModel(name, layers, "sigmoid", {"n_qubits": 0, "B": 0, "L": 0}, dims[0]).init(seed)


# ---------------------------------------------------------------- dispatch

def fit(kind: str, train_set, hyper: dict | None = None, seed=0):
    """Fit baseline ``kind`` on ``train_set`` (anything with ``.X`` and ``.y``)."""
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {', '.join(BASELINES)}")
    unknown = set(hyper or {}) - set(DEFAULTS[kind])
    if unknown:
        raise ValueError(f"{kind}: unknown hyperparameter(s) {sorted(unknown)}")
    h = {**DEFAULTS[kind], **(hyper or {})}
    X = np.asarray(train_set.X, dtype=float)
    y = np.asarray(train_set.y)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    d = X.shape[1]
    if kind == "knn":
        return KNN(X.copy(), y.astype(float), h["k"])
    if kind == "decision_tree":
        return DecisionTree(h["max_depth"], h["min_leaf"], h["max_features"]).fit(
            X, y, np.random.default_rng(seed))
    if kind == "random_forest":
        return fit_forest(X, y, seed=seed, **h)
    if kind == "qda":
        return fit_qda(X, y, h["reg"])
    if kind == "logistic_regression":
        model = _dense_model("logistic_regression", [d, 1], ["sigmoid"], seed)
    else:
        w = h["hidden"]
        model = _dense_model("mlpc", [d, w, w, 1], ["relu", "relu", "sigmoid"], seed)
    fit_epochs(model, X, y, h["epochs"], h["batch_size"], h["lr"], seed)
    return NeuralBaseline(model)


def predict_scores(model, X) -> np.ndarray:
    return model.predict_scores(X)


def epochs_of(kind: str, hyper: dict | None = None) -> int:
    return int({**DEFAULTS[kind], **(hyper or {})}.get("epochs", 0))
