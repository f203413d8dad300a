"""Minimal numeric substrate: parameters, layers, loss, Adam, gradient checking.

Every layer carries its own hand-derived backward pass with an explicit
forward cache; there is no autodiff graph. All math runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    LabelError,
    StateError,
    TrainingDivergedError,
    WindowTooShortError,
)


def _zeros_like(value: np.ndarray) -> np.ndarray:
    return np.zeros_like(value)


@dataclass
class Parameter:
    """A learnable array together with its gradient and Adam state."""

    value: np.ndarray
    grad: np.ndarray = None  # type: ignore[assignment]
    adam_m: np.ndarray = None  # type: ignore[assignment]
    adam_v: np.ndarray = None  # type: ignore[assignment]
    step_count: int = 0

    def __post_init__(self) -> None:
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = _zeros_like(self.value)
        if self.adam_m is None:
            self.adam_m = _zeros_like(self.value)
        if self.adam_v is None:
            self.adam_v = _zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def reset_optimizer_state(self) -> None:
        """Clear Adam moments; used when a fresh optimizer run begins."""
        self.adam_m[...] = 0.0
        self.adam_v[...] = 0.0
        self.step_count = 0

    def copy_value(self) -> np.ndarray:
        return self.value.copy()


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_step(param: Parameter, config: AdamConfig) -> None:
    """One Adam update with bias correction; zeroes the gradient afterwards."""
    param.step_count += 1
    t = param.step_count
    g = param.grad
    param.adam_m *= config.beta1
    param.adam_m += (1.0 - config.beta1) * g
    param.adam_v *= config.beta2
    param.adam_v += (1.0 - config.beta2) * g * g
    m_hat = param.adam_m / (1.0 - config.beta1**t)
    v_hat = param.adam_v / (1.0 - config.beta2**t)
    param.value -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    param.zero_grad()


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Linear:
    """Affine map on the last axis: out[..., o] = sum_i w[o, i] * x[..., i] + b[o]."""

    def __init__(self, weights: Parameter, bias: Parameter):
        self.weights = weights
        self.bias = bias
        self._cache: np.ndarray | None = None

    @classmethod
    def create(cls, in_dim: int, out_dim: int, rng: np.random.Generator) -> "Linear":
        w = Parameter(uniform_init(rng, (out_dim, in_dim), in_dim))
        b = Parameter(np.zeros(out_dim))
        return cls(w, b)

    @property
    def in_dim(self) -> int:
        return self.weights.value.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.value.shape[0]

    def parameters(self) -> list[Parameter]:
        return [self.weights, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.in_dim:
            raise DimensionError(
                f"linear expects last dim {self.in_dim} (weights "
                f"{self.weights.value.shape}), got input shape {x.shape}"
            )
        self._cache = x
        return x @ self.weights.value.T + self.bias.value

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError("linear backward called before forward")
        x = self._cache
        g2 = grad_out.reshape(-1, self.out_dim)
        x2 = x.reshape(-1, self.in_dim)
        self.weights.grad += g2.T @ x2
        self.bias.grad += g2.sum(axis=0)
        return grad_out @ self.weights.value


class ChannelwiseConv:
    """Valid convolution with (3, 1) kernels along the time axis.

    Input is (B, F_in, W, C); each output channel mixes input channels but
    never sensor channels, so channel c of the output depends only on
    channel c of the input.
    """

    TAPS = 3

    def __init__(self, kernels: Parameter, bias: Parameter):
        self.kernels = kernels  # (F_out, F_in, 3)
        self.bias = bias  # (F_out,)
        self._cache: np.ndarray | None = None

    @classmethod
    def create(cls, in_channels: int, out_channels: int, rng: np.random.Generator) -> "ChannelwiseConv":
        fan_in = in_channels * cls.TAPS
        k = Parameter(uniform_init(rng, (out_channels, in_channels, cls.TAPS), fan_in))
        b = Parameter(np.zeros(out_channels))
        return cls(k, b)

    @property
    def in_channels(self) -> int:
        return self.kernels.value.shape[1]

    @property
    def out_channels(self) -> int:
        return self.kernels.value.shape[0]

    def parameters(self) -> list[Parameter]:
        return [self.kernels, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError(
                f"conv expects (B, {self.in_channels}, W, C), got {x.shape}"
            )
        width = x.shape[2]
        if width < self.TAPS:
            raise WindowTooShortError(
                f"time axis {width} shorter than kernel extent {self.TAPS}"
            )
        self._cache = x
        out_w = width - self.TAPS + 1
        k = self.kernels.value
        out = np.zeros((x.shape[0], self.out_channels, out_w, x.shape[3]))
        for j in range(self.TAPS):
            # (F_out, F_in) x (B, F_in, out_w, C) summed over F_in
            out += np.einsum("fg,bgtc->bftc", k[:, :, j], x[:, :, j : j + out_w, :], optimize=True)
        out += self.bias.value[None, :, None, None]
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError("conv backward called before forward")
        x = self._cache
        out_w = grad_out.shape[2]
        k = self.kernels.value
        grad_in = np.zeros_like(x)
        for j in range(self.TAPS):
            self.kernels.grad[:, :, j] += np.einsum(
                "bftc,bgtc->fg", grad_out, x[:, :, j : j + out_w, :], optimize=True
            )
            grad_in[:, :, j : j + out_w, :] += np.einsum(
                "bftc,fg->bgtc", grad_out, k[:, :, j], optimize=True
            )
        self.bias.grad += grad_out.sum(axis=(0, 2, 3))
        return grad_in


class ReLU:
    def __init__(self) -> None:
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise StateError("relu backward called before forward")
        return np.where(self._mask, grad_out, 0.0)


class TwoLayerMlp:
    """Linear -> ReLU -> Linear, the stock classifier head."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, rng: np.random.Generator):
        self.layer1 = Linear.create(in_dim, hidden_dim, rng)
        self.relu = ReLU()
        self.layer2 = Linear.create(hidden_dim, out_dim, rng)

    @property
    def in_dim(self) -> int:
        return self.layer1.in_dim

    @property
    def out_dim(self) -> int:
        return self.layer2.out_dim

    def parameters(self) -> list[Parameter]:
        return self.layer1.parameters() + self.layer2.parameters()

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.layer2.forward(self.relu.forward(self.layer1.forward(x)))

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return self.layer1.backward(self.relu.backward(self.layer2.backward(grad_out)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def silu(x: np.ndarray) -> np.ndarray:
    """Elementwise x * sigmoid(x)."""
    return x * sigmoid(x)


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient (softmax - onehot) / B."""
    labels = np.asarray(labels)
    batch, n_classes = logits.shape
    if labels.shape != (batch,):
        raise DimensionError(f"labels shape {labels.shape} vs batch size {batch}")
    bad = (labels < 0) | (labels >= n_classes)
    if bad.any():
        idx = int(np.nonzero(bad)[0][0])
        raise LabelError(
            f"label {int(labels[idx])} at position {idx} outside [0, {n_classes})"
        )
    logp = log_softmax(logits)
    loss = float(-logp[np.arange(batch), labels].mean())
    grad = np.exp(logp)
    grad[np.arange(batch), labels] -= 1.0
    grad /= batch
    return loss, grad


def grad_check(
    loss_fn,
    params: list[Parameter],
    eps: float = 1e-5,
    rng: np.random.Generator | None = None,
    max_coords_per_param: int = 64,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` takes no arguments, runs forward + backward, accumulates
    gradients into ``params`` and returns the scalar loss. Returns the max
    over sampled coordinates of |analytic - numeric| / max(|a|, |n|, 1e-8).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite loss {loss!r} during gradient check")
    analytic = [p.grad.copy() for p in params]
    for p in params:
        p.zero_grad()

    worst = 0.0
    for p, a in zip(params, analytic):
        n_coords = p.value.size
        if n_coords <= max_coords_per_param:
            coords = np.arange(n_coords)
        else:
            coords = rng.choice(n_coords, size=max_coords_per_param, replace=False)
        flat = p.value.reshape(-1)
        a_flat = a.reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            up = loss_fn()
            flat[c] = orig - eps
            down = loss_fn()
            flat[c] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(a_flat[c]), abs(numeric), 1e-8)
            worst = max(worst, abs(a_flat[c] - numeric) / denom)
            for q in params:
                q.zero_grad()
    return worst
