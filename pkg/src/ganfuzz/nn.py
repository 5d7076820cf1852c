"""Minimal dense-network machinery: layers, losses, optimizers, serialization.

Everything is float64 numpy and single-threaded, so training runs are
bit-reproducible from an RNG seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, UsageError

ACTIVATIONS = ("identity", "relu", "tanh", "sigmoid", "softmax")

LOG_CLAMP = 1e-7


def apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "softmax":
        shifted = z - z.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=-1, keepdims=True)
    raise UsageError(f"unknown activation {name!r}")


def activation_backward(name: str, y: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Gradient through an activation, given its output y and upstream dL/dy."""
    if name == "identity":
        return upstream
    if name == "relu":
        return upstream * (y > 0.0)
    if name == "tanh":
        return upstream * (1.0 - y * y)
    if name == "sigmoid":
        return upstream * y * (1.0 - y)
    if name == "softmax":
        # Full row-wise Jacobian: dz = y * (g - sum(g * y))
        inner = (upstream * y).sum(axis=-1, keepdims=True)
        return y * (upstream - inner)
    raise UsageError(f"unknown activation {name!r}")


@dataclass
class DenseLayer:
    """Fully connected layer y = act(x W + b) with cached forward state."""

    weights: np.ndarray  # (in, out)
    bias: np.ndarray  # (out,)
    activation: str
    grad_weights: np.ndarray | None = field(default=None, repr=False)
    grad_bias: np.ndarray | None = field(default=None, repr=False)
    _x: np.ndarray | None = field(default=None, repr=False)
    _y: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise UsageError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ShapeError(
                f"inconsistent layer shapes {self.weights.shape} / {self.bias.shape}"
            )

    @classmethod
    def create(cls, n_in: int, n_out: int, activation: str, rng: np.random.Generator) -> "DenseLayer":
        # Glorot-style uniform init; keeps small nets in a trainable range.
        limit = np.sqrt(6.0 / (n_in + n_out))
        w = rng.uniform(-limit, limit, size=(n_in, n_out))
        return cls(weights=w, bias=np.zeros(n_out), activation=activation)

    @property
    def n_in(self) -> int:
        return self.weights.shape[0]

    @property
    def n_out(self) -> int:
        return self.weights.shape[1]

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_in:
            raise ShapeError(f"input width {x.shape[1]} != layer width {self.n_in}")
        y = apply_activation(self.activation, x @ self.weights + self.bias)
        if cache:
            self._x, self._y = x, y
        return y

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        """Accumulate parameter grads from cached forward state; return dL/dx."""
        if self._x is None:
            raise UsageError("backward() before forward(); no cached activations")
        if upstream.shape != self._y.shape:
            raise ShapeError(f"upstream shape {upstream.shape} != output {self._y.shape}")
        dz = activation_backward(self.activation, self._y, upstream)
        self.grad_weights = self._x.T @ dz
        self.grad_bias = dz.sum(axis=0)
        return dz @ self.weights.T


def forward(layers: list[DenseLayer], x: np.ndarray, cache: bool = True) -> np.ndarray:
    for layer in layers:
        x = layer.forward(x, cache=cache)
    return x


def backward(layers: list[DenseLayer], upstream: np.ndarray) -> np.ndarray:
    """Backpropagate through a stack; sets grads on each layer, returns dL/dx."""
    for layer in reversed(layers):
        upstream = layer.backward(upstream)
    return upstream


def parameters(layers: list[DenseLayer]) -> list[np.ndarray]:
    out = []
    for layer in layers:
        out.extend([layer.weights, layer.bias])
    return out


def gradients(layers: list[DenseLayer]) -> list[np.ndarray]:
    out = []
    for layer in layers:
        if layer.grad_weights is None:
            raise UsageError("gradients requested before backward()")
        out.extend([layer.grad_weights, layer.grad_bias])
    return out


# ---------------------------------------------------------------------------
# Losses


def loss_and_grad(kind: str, predicted: np.ndarray, target: np.ndarray):
    """Return (scalar loss, dL/dpredicted), mean-reduced over the batch.

    Predictions are clamped to [LOG_CLAMP, 1 - LOG_CLAMP] before any log.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ShapeError(f"predicted {predicted.shape} != target {target.shape}")
    p = np.clip(predicted, LOG_CLAMP, 1.0 - LOG_CLAMP)
    n = predicted.shape[0] if predicted.ndim > 1 else 1
    if kind == "binary_cross_entropy":
        loss = -np.mean(target * np.log(p) + (1.0 - target) * np.log1p(-p))
        # Gradient of the unclamped objective, with the true prediction in the
        # denominator: composed with a sigmoid output it reduces to the stable
        # (p - t) pre-activation form even when the sigmoid saturates past the
        # clamp, instead of vanishing.
        denom = np.maximum(predicted * (1.0 - predicted), 1e-300)
        grad = (p - target) / denom / p.size
        return float(loss), grad
    if kind == "categorical_cross_entropy":
        loss = -np.sum(target * np.log(p)) / n
        grad = -(target / np.maximum(predicted, 1e-300)) / n
        return float(loss), grad
    raise UsageError(f"unknown loss kind {kind!r}")


# ---------------------------------------------------------------------------
# Optimizers


class Sgd:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads, strict=True):
            if p.shape != g.shape:
                raise ShapeError(f"param {p.shape} != grad {g.shape}")
            p -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        for p, g, m, v in zip(params, grads, self._m, self._v, strict=True):
            if p.shape != g.shape:
                raise ShapeError(f"param {p.shape} != grad {g.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class RmsProp:
    def __init__(self, lr: float, rho: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self._acc: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self._acc is None:
            self._acc = [np.zeros_like(p) for p in params]
        for p, g, a in zip(params, grads, self._acc, strict=True):
            if p.shape != g.shape:
                raise ShapeError(f"param {p.shape} != grad {g.shape}")
            a *= self.rho
            a += (1.0 - self.rho) * g * g
            p -= self.lr * g / (np.sqrt(a) + self.eps)


def make_optimizer(kind: str, lr: float, **kwargs):
    if kind == "sgd":
        return Sgd(lr)
    if kind == "adam":
        return Adam(lr, **kwargs)
    if kind == "rmsprop":
        return RmsProp(lr, **kwargs)
    raise UsageError(f"unknown optimizer kind {kind!r}")


# ---------------------------------------------------------------------------
# Dropout


def dropout_forward(x: np.ndarray, rate: float, rng: np.random.Generator, training: bool = True):
    """Inverted dropout. Returns (output, mask); mask is the applied scale."""
    if not 0.0 <= rate < 1.0:
        raise UsageError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, np.ones_like(x)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


# ---------------------------------------------------------------------------
# Serialization: "SFNN" container, little-endian f64 payloads.

SFNN_MAGIC = b"SFNN"
SFNN_VERSION = 1
_ACT_TAGS = {name: i for i, name in enumerate(ACTIVATIONS)}
_TAG_ACTS = {i: name for name, i in _ACT_TAGS.items()}


def dump_network(layers: list[DenseLayer]) -> bytes:
    parts = [SFNN_MAGIC, struct.pack("<HH", SFNN_VERSION, len(layers))]
    for layer in layers:
        parts.append(struct.pack("<BII", _ACT_TAGS[layer.activation], layer.n_in, layer.n_out))
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(parts)


def load_network(blob: bytes) -> tuple[list[DenseLayer], int]:
    """Parse an SFNN container; returns (layers, bytes consumed)."""
    if blob[:4] != SFNN_MAGIC:
        raise UsageError("not an SFNN container (bad magic)")
    version, count = struct.unpack_from("<HH", blob, 4)
    if version != SFNN_VERSION:
        raise UsageError(f"unsupported SFNN version {version}")
    pos = 8
    layers = []
    for _ in range(count):
        tag, n_in, n_out = struct.unpack_from("<BII", blob, pos)
        pos += 9
        w = np.frombuffer(blob, dtype="<f8", count=n_in * n_out, offset=pos).reshape(n_in, n_out)
        pos += 8 * n_in * n_out
        b = np.frombuffer(blob, dtype="<f8", count=n_out, offset=pos)
        pos += 8 * n_out
        layers.append(DenseLayer(weights=w.copy(), bias=b.copy(), activation=_TAG_ACTS[tag]))
    return layers, pos


def assert_finite(arrays, step: str) -> None:
    """Raise TrainingError naming `step` if any array contains NaN/Inf."""
    from .errors import TrainingError

    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise TrainingError(f"non-finite values after step: {step}")
