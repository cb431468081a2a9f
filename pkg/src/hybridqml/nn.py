"""Dense layers, binary cross-entropy and Adam.

Layers do not own their storage: ``weights`` and ``bias`` are views into a flat
parameter vector held by the model, so an optimizer step on that vector is
immediately visible to every layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAKY_SLOPE = 0.01
P_CLIP = 1e-7


class TrainingDiverged(ArithmeticError):
    """A NaN or Inf reached the parameters or their gradients."""


def _sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


ACTIVATIONS = {
    "identity": (lambda z: z, lambda z, a: np.ones_like(z)),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(float)),
    "leaky_relu": (
        lambda z: np.where(z > 0, z, LEAKY_SLOPE * z),
        lambda z, a: np.where(z > 0, 1.0, LEAKY_SLOPE),
    ),
    "sigmoid": (_sigmoid, lambda z, a: a * (1.0 - a)),
}


@dataclass
class DenseLayer:
    in_dim: int
    out_dim: int
    activation: str = "identity"
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dimensions must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights is None:
            self.weights = np.zeros((self.out_dim, self.in_dim))
        if self.bias is None:
            self.bias = np.zeros(self.out_dim)

    @property
    def n_params(self) -> int:
        return self.out_dim * (self.in_dim + 1)

    def bind(self, flat: np.ndarray) -> None:
        """Point weights and bias at ``flat`` (length ``n_params``; weights first, row-major)."""
        k = self.out_dim * self.in_dim
        self.weights = flat[:k].reshape(self.out_dim, self.in_dim)
        self.bias = flat[k:self.n_params]

    def init(self, rng: np.random.Generator) -> None:
        limit = np.sqrt(6.0 / (self.in_dim + self.out_dim))
        self.weights[...] = rng.uniform(-limit, limit, size=self.weights.shape)
        self.bias[...] = 0.0

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"expected input width {self.in_dim}, got {x.shape[-1]}")
        z = x @ self.weights.T + self.bias
        a = ACTIVATIONS[self.activation][0](z)
        return a, (x, z, a)

    def backward(self, cache: tuple, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Given dL/d(output) per sample, return (summed dL/d(flat params), dL/d(input))."""
        x, z, a = cache
        dz = grad_out * ACTIVATIONS[self.activation][1](z, a)
        gw = dz.T @ x
        gb = dz.sum(axis=0)
        return np.concatenate([gw.ravel(), gb]), dz @ self.weights


def dense_forward(layer: DenseLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != layer.in_dim:
        raise ValueError(f"expected a vector of length {layer.in_dim}, got shape {x.shape}")
    return layer.forward(x[None, :])[0][0]


def bce_loss(p, y):
    """Binary cross-entropy with p clipped to [1e-7, 1 - 1e-7]."""
    p = np.clip(p, P_CLIP, 1.0 - P_CLIP)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def bce_grad(p, y):
    """dL/dp of :func:`bce_loss`; zero where the clip is active."""
    p = np.asarray(p, dtype=float)
    inside = (p > P_CLIP) & (p < 1.0 - P_CLIP)
    pc = np.clip(p, P_CLIP, 1.0 - P_CLIP)
    return np.where(inside, -y / pc + (1.0 - y) / (1.0 - pc), 0.0)


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def for_params(cls, n: int, **kw) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), **kw)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update, applied to ``params`` in place (and returned)."""
    grads = np.asarray(grads, dtype=float)
    if grads.shape != params.shape or state.m.shape != params.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, moments {state.m.shape}"
        )
    if not np.all(np.isfinite(grads)):
        bad = np.flatnonzero(~np.isfinite(grads))
        raise TrainingDiverged(f"non-finite gradient at step {state.t + 1}, indices {bad[:10].tolist()}")
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grads
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    params -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if not np.all(np.isfinite(params)):
        raise TrainingDiverged(f"non-finite parameter after step {state.t}")
    return params
