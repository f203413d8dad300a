"""Spline-parameterized classifier layer with per-edge learnable activations.

Each edge (input i -> output o) carries its own univariate spline on a
shared fixed knot grid. Because basis values vanish exactly outside their
support, a training batch confined to a sub-interval of the grid range can
only move the coefficients whose bases overlap that interval.
"""

from __future__ import annotations

import numpy as np

from .errors import StateError
from .nn import Parameter, silu, silu_grad
from .spline import (
    KnotVector,
    bspline_basis_and_derivative,
    clamp_to_range,
    make_knots,
)


class KanLayer:
    """One spline layer mapping (B, in_dim) -> (B, out_dim).

    out[b, o] = sum_i sum_m coefs[o, i, m] * basis_m(x[b, i])
                (+ base_weights[o, i] * silu(x[b, i]) when use_base)

    Inputs outside the grid range are clamped and counted in
    ``clamp_count``; a correctly redistributed pipeline never clamps.
    """

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        knots: KnotVector,
        rng: np.random.Generator,
        use_base: bool = False,
        coef_scale: float = 0.1,
    ):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.knots = knots
        self.use_base = use_base
        n_coef = knots.n_bases
        self.spline_coefs = Parameter(
            rng.uniform(-coef_scale, coef_scale, size=(out_dim, in_dim, n_coef))
        )
        limit = 1.0 / np.sqrt(in_dim)
        self.base_weights = Parameter(rng.uniform(-limit, limit, size=(out_dim, in_dim)))
        self.clamp_count = 0
        self._cache: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None

    @classmethod
    def create(
        cls,
        in_dim: int,
        out_dim: int,
        grid_number: int,
        order: int,
        rng: np.random.Generator,
        range_min: float = 0.0,
        range_max: float = 1.0,
        use_base: bool = False,
    ) -> "KanLayer":
        kv = make_knots(range_min, range_max, grid_number, order)
        return cls(in_dim, out_dim, kv, rng, use_base=use_base)

    def parameters(self) -> list[Parameter]:
        if self.use_base:
            return [self.spline_coefs, self.base_weights]
        return [self.spline_coefs]

    def forward(self, x: np.ndarray) -> np.ndarray:
        clamped, moved = clamp_to_range(self.knots, np.asarray(x, dtype=np.float64))
        self.clamp_count += int(moved.sum())
        bases, dbases = bspline_basis_and_derivative(self.knots, clamped)
        out = np.einsum("oim,bim->bo", self.spline_coefs.value, bases, optimize=True)
        if self.use_base:
            out += silu(clamped) @ self.base_weights.value.T
        self._cache = (clamped, moved, bases, dbases)
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError("kan backward called before forward")
        clamped, moved, bases, dbases = self._cache
        self.spline_coefs.grad += np.einsum("bo,bim->oim", grad_out, bases, optimize=True)
        grad_in = np.einsum(
            "bo,oim,bim->bi", grad_out, self.spline_coefs.value, dbases, optimize=True
        )
        if self.use_base:
            self.base_weights.grad += np.einsum(
                "bo,bi->oi", grad_out, silu(clamped), optimize=True
            )
            grad_in += (grad_out @ self.base_weights.value) * silu_grad(clamped)
        # clamping is flat: no gradient flows to out-of-range inputs
        grad_in[moved] = 0.0
        return grad_in
