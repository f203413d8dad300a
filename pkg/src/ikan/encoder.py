"""Task-specific feature extractor with a shape-independent output width.

Four channel-wise convolutions shrink the time axis, a linear layer fuses
the sensor channels, and a pooling pair (attention + max) collapses what
remains, so every admissible (window, channels) input yields exactly
2 * conv_channels features. That fixed width is the contract that lets a
single classifier serve all tasks.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, StateError, WindowTooShortError
from .nn import ChannelwiseConv, Linear, Parameter, ReLU

N_CONV_LAYERS = 4


@dataclass(frozen=True)
class EncoderSpec:
    window: int
    channels: int
    conv_channels: int = 10
    fusion_dim: int = 8

    def __post_init__(self) -> None:
        if self.window < 2 * N_CONV_LAYERS + 1:
            raise WindowTooShortError(
                f"window {self.window} leaves no time extent after "
                f"{N_CONV_LAYERS} valid (3,1) convolutions (need >= {2 * N_CONV_LAYERS + 1})"
            )
        if self.channels < 1 or self.conv_channels < 1 or self.fusion_dim < 1:
            raise DimensionError(f"invalid encoder spec {self}")

    @property
    def conv_out_window(self) -> int:
        return self.window - 2 * N_CONV_LAYERS

    @property
    def feature_dim(self) -> int:
        return 2 * self.conv_channels


class AttentionMaxPool:
    """Collapse (B, F, T, D) to (B, 2F): learnable attention pooling over
    the T*D positions of each feature map, concatenated with a global max."""

    def __init__(self, conv_channels: int, n_positions: int, rng: np.random.Generator):
        limit = 1.0 / np.sqrt(n_positions)
        self.scores = Parameter(rng.uniform(-limit, limit, size=(conv_channels, n_positions)))
        self._cache = None

    def parameters(self) -> list[Parameter]:
        return [self.scores]

    def _weights(self) -> np.ndarray:
        s = self.scores.value
        shifted = s - s.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def forward(self, features: np.ndarray) -> np.ndarray:
        b, f, t, d = features.shape
        flat = features.reshape(b, f, t * d)
        w = self._weights()
        att = np.einsum("bfp,fp->bf", flat, w, optimize=True)
        arg = flat.argmax(axis=2)
        mx = np.take_along_axis(flat, arg[:, :, None], axis=2)[:, :, 0]
        self._cache = (flat, w, att, arg, (b, f, t, d))
        return np.concatenate([att, mx], axis=1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError("pool backward called before forward")
        flat, w, att, arg, shape = self._cache
        b, f, t, d = shape
        g_att = grad_out[:, :f]
        g_max = grad_out[:, f:]
        grad_flat = g_att[:, :, None] * w[None, :, :]
        # softmax score gradient: dA/ds_q = w_q * (x_q - A)
        self.scores.grad += np.einsum(
            "bf,fp,bfp->fp", g_att, w, flat - att[:, :, None], optimize=True
        )
        np.put_along_axis(
            grad_flat,
            arg[:, :, None],
            np.take_along_axis(grad_flat, arg[:, :, None], axis=2) + g_max[:, :, None],
            axis=2,
        )
        return grad_flat.reshape(b, f, t, d)


class Encoder:
    """Conv stack + channel fusion + pooling; owns all stage-1 parameters."""

    def __init__(self, spec: EncoderSpec, seed: int):
        self.spec = spec
        self.frozen = False
        rng = np.random.default_rng([seed, spec.window, spec.channels])
        f = spec.conv_channels
        self.convs = [
            ChannelwiseConv.create(1 if i == 0 else f, f, rng) for i in range(N_CONV_LAYERS)
        ]
        self.relus = [ReLU() for _ in range(N_CONV_LAYERS - 1)]
        self.fusion = Linear.create(spec.channels, spec.fusion_dim, rng)
        self.pool = AttentionMaxPool(f, spec.conv_out_window * spec.fusion_dim, rng)

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        for conv in self.convs:
            params.extend(conv.parameters())
        params.extend(self.fusion.parameters())
        params.extend(self.pool.parameters())
        return params

    def freeze(self) -> None:
        self.frozen = True

    def forward(self, batch: np.ndarray) -> np.ndarray:
        expected = (1, self.spec.window, self.spec.channels)
        if batch.ndim != 4 or batch.shape[1:] != expected:
            raise DimensionError(
                f"encoder expects (B, 1, {self.spec.window}, {self.spec.channels}), "
                f"got {batch.shape}"
            )
        h = batch
        for i, conv in enumerate(self.convs):
            h = conv.forward(h)
            if i < len(self.relus):
                h = self.relus[i].forward(h)
        # fuse the sensor-channel axis: (B, F, T, C) -> (B, F, T, D)
        h = self.fusion.forward(h)
        return self.pool.forward(h)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self.frozen:
            raise StateError("backward through a frozen encoder")
        g = self.pool.backward(grad_out)
        g = self.fusion.backward(g)
        for i in range(N_CONV_LAYERS - 1, -1, -1):
            if i < len(self.relus):
                g = self.relus[i].backward(g)
            g = self.convs[i].backward(g)
        return g

    def state_arrays(self) -> list[np.ndarray]:
        return [p.value for p in self.parameters()]

    def load_state_arrays(self, arrays: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(arrays) != len(params):
            raise DimensionError(
                f"checkpoint has {len(arrays)} arrays, encoder has {len(params)}"
            )
        for p, a in zip(params, arrays):
            if p.value.shape != a.shape:
                raise DimensionError(f"checkpoint shape {a.shape} vs {p.value.shape}")
            p.value[...] = a

    def param_hash(self) -> str:
        digest = hashlib.sha256()
        for p in self.parameters():
            digest.update(np.ascontiguousarray(p.value).tobytes())
        return digest.hexdigest()


def build_encoder(spec: EncoderSpec, seed: int) -> Encoder:
    return Encoder(spec, seed)
