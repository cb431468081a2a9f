"""Classifier architectures built from dense layers and quantum nodes.

A :class:`HybridModel` is a chain of stages (``DenseLayer`` or
``QuantumNode``) sharing one flat parameter vector, followed by a head that
turns the last stage's output into a class-1 probability:

* ``"expval"``  p = (1 + mean_w <Z_w>) / 2   (DRC, VC, VC-DRC)
* ``"sigmoid"`` p = output of a final single-neuron sigmoid layer

Architectures (``n`` qubits, ``B`` blocks, ``L`` entangling layers per block):

=============  ============================================================
``drc``        1 qubit; per block ROT(x1, x2, x3|0) then trainable ROT
``vc``         RX angle embedding, then L strongly-entangling layers
``vcdrc``      B repetitions of [RX embedding + L entangling layers]
``qnode``      VC-DRC -> Dense(n -> 1, sigmoid)
``fh_nn_vcdrc`` Dense(d -> 2, ReLU) -> Dense(2 -> n, LeakyReLU) -> VC-DRC -> Dense(n -> 1, sigmoid)
``fh_vcdrc_nn`` VC-DRC -> Dense(n -> 2, ReLU) -> Dense(2 -> 2, LeakyReLU) -> Dense(2 -> 1, sigmoid)
``nn``         the classical part of ``fh_nn_vcdrc`` alone, with a sigmoid neuron on top
=============  ============================================================

An entangling layer is a trainable ROT on every qubit followed by a CNOT ring
``i -> (i + 1) mod n``. With two qubits the ring is a single CNOT(0 -> 1),
since the closing CNOT(1 -> 0) would partially undo it.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import UndefinedMetricError, auc_score
from .nn import AdamState, DenseLayer, adam_step, bce_grad, bce_loss
from .qgrad import batch_jacobian
from .simcore import CircuitSpec, Gate, const, inp, param, run_batch

ARCHITECTURES = ("drc", "vc", "vcdrc", "qnode", "fh_nn_vcdrc", "fh_vcdrc_nn", "nn")
QUANTUM_ARCHITECTURES = ARCHITECTURES[:-1]


# ---------------------------------------------------------------- circuits

def cnot_ring(n: int) -> list[tuple[int, int]]:
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def drc_circuit(B: int, n_features: int = 2) -> CircuitSpec:
    if B < 1:
        raise ValueError(f"DRC needs at least one block, got B={B}")
    if not 1 <= n_features <= 3:
        raise ValueError(f"single-qubit DRC loads at most 3 features per ROT, got {n_features}")
    gates = []
    for b in range(B):
        embed = [inp(k) if k < n_features else const(0.0) for k in range(3)]
        gates.append(Gate("ROT", (0,), embed))
        gates.append(Gate("ROT", (0,), (param(3 * b), param(3 * b + 1), param(3 * b + 2))))
    return CircuitSpec(1, gates, n_params=3 * B, n_inputs=n_features)


def vcdrc_circuit(n_qubits: int, B: int, L: int) -> CircuitSpec:
    if n_qubits < 2:
        raise ValueError(f"VC circuits need at least 2 qubits, got {n_qubits}")
    if B < 1 or L < 1:
        raise ValueError(f"need B >= 1 and L >= 1, got B={B}, L={L}")
    gates = []
    p = 0
    for _ in range(B):
        gates += [Gate("RX", (w,), (inp(w),)) for w in range(n_qubits)]
        for _ in range(L):
            for w in range(n_qubits):
                gates.append(Gate("ROT", (w,), (param(p), param(p + 1), param(p + 2))))
                p += 3
            gates += [Gate("CNOT", pair) for pair in cnot_ring(n_qubits)]
    return CircuitSpec(n_qubits, gates, n_params=p, n_inputs=n_qubits)


# ---------------------------------------------------------------- stages

@dataclass
class QuantumNode:
    """A circuit whose input slots are fed by the previous stage and whose
    per-wire <Z> values are this stage's output."""

    circuit: CircuitSpec
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def in_dim(self) -> int:
        return self.circuit.n_inputs

    @property
    def out_dim(self) -> int:
        return self.circuit.n_qubits

    @property
    def n_params(self) -> int:
        return self.circuit.n_params

    def bind(self, flat: np.ndarray) -> None:
        self.params = flat[:self.n_params]

    def init(self, rng: np.random.Generator) -> None:
        self.params[...] = rng.uniform(0.0, 2 * np.pi, size=self.n_params)

    def forward(self, x: np.ndarray, need_grad: bool = False):
        if need_grad:
            E, dp, di = batch_jacobian(self.circuit, self.params, x)
            return E, (dp, di)
        return run_batch(self.circuit, self.params, x), None

    def backward(self, cache, grad_out: np.ndarray):
        dp, di = cache
        return np.einsum("bq,bqp->p", grad_out, dp), np.einsum("bq,bqi->bi", grad_out, di)


# ---------------------------------------------------------------- model

class HybridModel:
    def __init__(self, arch: str, stages: list, head: str, hyper: dict, input_dim: int):
        if head not in ("expval", "sigmoid"):
            raise ValueError(f"unknown head {head!r}")
        dim = input_dim
        for s in stages:
            if s.in_dim != dim:
                raise ValueError(f"{type(s).__name__} expects {s.in_dim} inputs but receives {dim}")
            dim = s.out_dim
        if head == "expval" and not isinstance(stages[-1], QuantumNode):
            raise ValueError("expval head needs a quantum final stage")
        if head == "sigmoid" and not (
            isinstance(stages[-1], DenseLayer) and stages[-1].activation == "sigmoid" and dim == 1
        ):
            raise ValueError("sigmoid head needs a final single-neuron sigmoid layer")
        self.arch = arch
        self.stages = stages
        self.head = head
        self.hyper = dict(hyper)
        self.input_dim = input_dim
        self.offsets = np.cumsum([0] + [s.n_params for s in stages])
        self.params = np.zeros(int(self.offsets[-1]))
        for s, lo, hi in zip(stages, self.offsets[:-1], self.offsets[1:]):
            s.bind(self.params[lo:hi])

    @property
    def n_params(self) -> int:
        return self.params.shape[0]

    def param_counts(self) -> list[tuple[str, int]]:
        return [("quantum" if isinstance(s, QuantumNode) else "dense", s.n_params) for s in self.stages]

    def init(self, seed=None) -> "HybridModel":
        rng = np.random.default_rng(seed)
        for s in self.stages:
            s.init(rng)
        return self

    def set_params(self, values) -> "HybridModel":
        values = np.asarray(values, dtype=float)
        if values.shape != self.params.shape:
            raise ValueError(f"expected {self.n_params} parameters, got {values.shape}")
        self.params[...] = values
        return self

    def _forward(self, X, need_grad: bool):
        a = np.asarray(X, dtype=float)
        if a.ndim != 2 or a.shape[1] != self.input_dim:
            raise ValueError(f"expected an (N, {self.input_dim}) input matrix, got shape {a.shape}")
        caches = []
        for s in self.stages:
            if isinstance(s, QuantumNode):
                a, c = s.forward(a, need_grad)
            else:
                a, c = s.forward(a)
            caches.append(c)
        if self.head == "expval":
            p = 0.5 * (1.0 + a.mean(axis=1))
        else:
            p = a[:, 0]
        return np.clip(p, 0.0, 1.0), caches

    def predict_proba(self, X) -> np.ndarray:
        return self._forward(X, need_grad=False)[0]

    def loss(self, X, y) -> float:
        return float(np.mean(bce_loss(self.predict_proba(X), np.asarray(y, dtype=float))))

    def loss_and_grad(self, X, y) -> tuple[float, np.ndarray]:
        """Mean BCE over the batch and its gradient w.r.t. the flat parameter vector."""
        y = np.asarray(y, dtype=float)
        p, caches = self._forward(X, need_grad=True)
        n = p.shape[0]
        g = bce_grad(p, y)[:, None] / n
        if self.head == "expval":
            q = self.stages[-1].out_dim
            g = np.repeat(g / (2.0 * q), q, axis=1)
        grad = np.zeros_like(self.params)
        for i in range(len(self.stages) - 1, -1, -1):
            gp, g = self.stages[i].backward(caches[i], g)
            grad[self.offsets[i]:self.offsets[i + 1]] = gp
        return float(np.mean(bce_loss(p, y))), grad

    def to_dict(self, **extra) -> dict:
        return {
            "format": "hybridqml-model/1",
            "architecture": self.arch,
            "hyper": self.hyper,
            "params": [float(v) for v in self.params],
            **({"meta": extra} if extra else {}),
        }


def model_backward(model: HybridModel, x, y) -> np.ndarray:
    """Gradient of the single-sample BCE loss w.r.t. every trainable parameter."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return model.loss_and_grad(x, np.array([float(y)]))[1]


# ---------------------------------------------------------------- builders

def _vcdrc_node(n_qubits, B, L):
    return QuantumNode(vcdrc_circuit(n_qubits, B, L))


def build_drc(B: int = 6, n_features: int = 2, seed=None) -> HybridModel:
    node = QuantumNode(drc_circuit(B, n_features))
    hyper = {"n_qubits": 1, "B": B, "L": 0, "n_features": n_features}
    return HybridModel("drc", [node], "expval", hyper, n_features).init(seed)


def build_vc(n_qubits: int = 2, L: int = 6, seed=None) -> HybridModel:
    hyper = {"n_qubits": n_qubits, "B": 1, "L": L, "n_features": n_qubits}
    return HybridModel("vc", [_vcdrc_node(n_qubits, 1, L)], "expval", hyper, n_qubits).init(seed)


def build_vcdrc(n_qubits: int = 2, B: int = 6, L: int = 1, seed=None) -> HybridModel:
    hyper = {"n_qubits": n_qubits, "B": B, "L": L, "n_features": n_qubits}
    return HybridModel("vcdrc", [_vcdrc_node(n_qubits, B, L)], "expval", hyper, n_qubits).init(seed)


def build_qnode(n_qubits: int = 2, B: int = 6, L: int = 1, seed=None) -> HybridModel:
    stages = [_vcdrc_node(n_qubits, B, L), DenseLayer(n_qubits, 1, "sigmoid")]
    hyper = {"n_qubits": n_qubits, "B": B, "L": L, "n_features": n_qubits}
    return HybridModel("qnode", stages, "sigmoid", hyper, n_qubits).init(seed)


def build_fh_nn_vcdrc(n_qubits: int = 2, B: int = 6, L: int = 1, n_features: int = 2,
                      hidden: int = 2, seed=None) -> HybridModel:
    """Master (ReLU) and feeding (LeakyReLU, one neuron per qubit) layers whose outputs
    become the VC-DRC embedding angles, then a sigmoid decision neuron."""
    stages = [
        DenseLayer(n_features, hidden, "relu"),
        DenseLayer(hidden, n_qubits, "leaky_relu"),
        _vcdrc_node(n_qubits, B, L),
        DenseLayer(n_qubits, 1, "sigmoid"),
    ]
    hyper = {"n_qubits": n_qubits, "B": B, "L": L, "n_features": n_features, "hidden": hidden}
    return HybridModel("fh_nn_vcdrc", stages, "sigmoid", hyper, n_features).init(seed)


def build_fh_vcdrc_nn(n_qubits: int = 2, B: int = 6, L: int = 1, hidden: int = 2,
                      seed=None) -> HybridModel:
    stages = [
        _vcdrc_node(n_qubits, B, L),
        DenseLayer(n_qubits, hidden, "relu"),
        DenseLayer(hidden, hidden, "leaky_relu"),
        DenseLayer(hidden, 1, "sigmoid"),
    ]
    hyper = {"n_qubits": n_qubits, "B": B, "L": L, "n_features": n_qubits, "hidden": hidden}
    return HybridModel("fh_vcdrc_nn", stages, "sigmoid", hyper, n_qubits).init(seed)


def build_nn(n_features: int = 2, hidden: int = 2, n_qubits: int = 2, seed=None) -> HybridModel:
    stages = [
        DenseLayer(n_features, hidden, "relu"),
        DenseLayer(hidden, n_qubits, "leaky_relu"),
        DenseLayer(n_qubits, 1, "sigmoid"),
    ]
    hyper = {"n_qubits": n_qubits, "B": 0, "L": 0, "n_features": n_features, "hidden": hidden}
    return HybridModel("nn", stages, "sigmoid", hyper, n_features).init(seed)


def build(arch: str, n_features: int = 2, n_qubits: int | None = None, B: int = 6, L: int = 1,
          seed=None, hidden: int = 2) -> HybridModel:
    """Build any architecture by id with the roster defaults (n_qubits = n_features)."""
    if arch == "drc":
        return build_drc(B, n_features, seed=seed)
    nq = n_features if n_qubits is None else n_qubits
    if arch in ("vc", "vcdrc", "qnode", "fh_vcdrc_nn") and nq != n_features:
        raise ValueError(f"{arch} embeds one feature per qubit: n_qubits={nq}, n_features={n_features}")
    if arch == "vc":
        return build_vc(nq, L, seed=seed)
    if arch == "vcdrc":
        return build_vcdrc(nq, B, L, seed=seed)
    if arch == "qnode":
        return build_qnode(nq, B, L, seed=seed)
    if arch == "fh_nn_vcdrc":
        return build_fh_nn_vcdrc(nq, B, L, n_features, hidden, seed=seed)
    if arch == "fh_vcdrc_nn":
        return build_fh_vcdrc_nn(nq, B, L, hidden, seed=seed)
    if arch == "nn":
        return build_nn(n_features, hidden, nq, seed=seed)
    raise ValueError(f"unknown architecture {arch!r}; expected one of {', '.join(ARCHITECTURES)}")


def from_dict(d: dict) -> HybridModel:
    h = d["hyper"]
    arch = d["architecture"]
    kw = {"n_features": h["n_features"], "B": max(h["B"], 1), "L": max(h["L"], 1)}
    if arch != "drc":
        kw["n_qubits"] = h["n_qubits"]
    if "hidden" in h:
        kw["hidden"] = h["hidden"]
    return build(arch, **kw).set_params(d["params"])


def save_model(model: HybridModel, path, **extra) -> None:
    Path(path).write_text(json.dumps(model.to_dict(**extra), indent=1) + "\n")


def load_model(path) -> tuple[HybridModel, dict]:
    d = json.loads(Path(path).read_text())
    return from_dict(d), d.get("meta", {})


# ---------------------------------------------------------------- training

@dataclass
class TrainConfig:
    epochs: int = 35
    batch_size: int = 32
    lr: float = 0.01
    seed: int = 0


@dataclass
class TrainReport:
    """Per-epoch history; index 0 is the untrained model."""

    model: str
    epochs_run: int
    train_auc: list[float]
    test_auc: list[float]
    loss: list[float]
    best_auc: float
    best_epoch: int
    wall_time_s: float


def run_epoch(model: HybridModel, X, y, opt: AdamState, batch_size: int,
              rng: np.random.Generator) -> float:
    """One shuffled pass of mini-batch Adam; returns the mean batch loss."""
    order = rng.permutation(X.shape[0])
    losses = []
    for lo in range(0, len(order), batch_size):
        idx = order[lo:lo + batch_size]
        loss, grad = model.loss_and_grad(X[idx], y[idx])
        adam_step(opt, model.params, grad)
        losses.append(loss)
    return float(np.mean(losses))


def fit_epochs(model: HybridModel, X, y, epochs: int, batch_size: int = 32, lr: float = 0.01,
               seed=0) -> HybridModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    opt = AdamState.for_params(model.n_params, lr=lr)
    for _ in range(epochs):
        run_epoch(model, X, y, opt, batch_size, rng)
    return model


def train(model: HybridModel, train_set, test_set, config: TrainConfig | None = None) -> TrainReport:
    """Mini-batch Adam on BCE, scoring test AUC after every epoch and keeping the best."""
    config = config or TrainConfig()
    Xtr = np.asarray(train_set.X, dtype=float)
    ytr = np.asarray(train_set.y, dtype=float)
    Xte = np.asarray(test_set.X, dtype=float)
    yte = np.asarray(test_set.y)
    if Xtr.shape[0] == 0 or Xte.shape[0] == 0:
        raise ValueError("train and test sets must be non-empty")
    if len(np.unique(yte)) < 2:
        raise UndefinedMetricError("test set has a single class; AUC is undefined")
    if config.epochs < 0 or config.batch_size < 1:
        raise ValueError("epochs must be >= 0 and batch_size >= 1")

    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    opt = AdamState.for_params(model.n_params, lr=config.lr)
    two_class_train = len(np.unique(ytr)) == 2

    def evaluate():
        tr = auc_score(model.predict_proba(Xtr), ytr) if two_class_train else float("nan")
        return tr, auc_score(model.predict_proba(Xte), yte)

    tr, te = evaluate()
    train_auc, test_auc, losses = [tr], [te], [model.loss(Xtr, ytr)]
    for _ in range(config.epochs):
        losses.append(run_epoch(model, Xtr, ytr, opt, config.batch_size, rng))
        tr, te = evaluate()
        train_auc.append(tr)
        test_auc.append(te)
    best = int(np.argmax(test_auc))
    return TrainReport(model.arch, config.epochs, train_auc, test_auc, losses,
                       float(test_auc[best]), best, time.perf_counter() - start)
