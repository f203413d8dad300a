"""Uniform B-spline bases on a fixed grid, plus their locality footprint.

The basis evaluation seeds the Cox-de Boor recursion with a one-hot span
indicator, so every value outside the k+1 active bases of a point is an
exact float 0.0. That exactness is what makes the locality guarantees of
the spline classifier testable bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RangeError


@dataclass(frozen=True)
class KnotVector:
    """Uniformly extended knot vector over [range_min, range_max].

    The grid splits the range into ``grid_number`` cells of width h and
    extends ``order`` extra knots beyond each end, giving
    grid_number + 2 * order + 1 knots and grid_number + order bases.
    """

    range_min: float
    range_max: float
    grid_number: int
    order: int
    knots: np.ndarray

    @property
    def n_bases(self) -> int:
        return self.grid_number + self.order

    @property
    def cell_width(self) -> float:
        return (self.range_max - self.range_min) / self.grid_number


def make_knots(range_min: float, range_max: float, grid_number: int, order: int) -> KnotVector:
    if not range_min < range_max:
        raise RangeError(f"degenerate grid range [{range_min}, {range_max}]")
    if grid_number < 1:
        raise RangeError(f"grid_number must be >= 1, got {grid_number}")
    if order < 0:
        raise RangeError(f"order must be >= 0, got {order}")
    h = (range_max - range_min) / grid_number
    start = range_min - order * h
    knots = start + h * np.arange(grid_number + 2 * order + 1, dtype=np.float64)
    return KnotVector(range_min, range_max, grid_number, order, knots)


def _spans(kv: KnotVector, x: np.ndarray) -> np.ndarray:
    """Interior knot interval index of each (already clamped) sample."""
    k, g = kv.order, kv.grid_number
    rel = np.floor((x - kv.range_min) / kv.cell_width).astype(np.int64)
    return np.clip(rel, 0, g - 1) + k


def _basis_stack(kv: KnotVector, x: np.ndarray) -> list[np.ndarray]:
    """Bases of every degree 0..order at clamped points; entry d has
    len(knots) - 1 - d columns."""
    t = kv.knots
    n_cells = len(t) - 1
    xf = x.reshape(-1)
    spans = _spans(kv, xf)
    bases = np.zeros((xf.size, n_cells))
    bases[np.arange(xf.size), spans] = 1.0
    stack = [bases]
    xc = xf[:, None]
    for d in range(1, kv.order + 1):
        left = (xc - t[None, : n_cells - d]) / (t[d:-1] - t[: n_cells - d])
        right = (t[None, d + 1 :] - xc) / (t[d + 1 :] - t[1 : n_cells - d + 1])
        bases = left * bases[:, :-1] + right * bases[:, 1:]
        stack.append(bases)
    return stack


def clamp_to_range(kv: KnotVector, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clamp to the grid range; second return flags which entries moved."""
    clamped = np.clip(x, kv.range_min, kv.range_max)
    return clamped, clamped != x


def bspline_basis(kv: KnotVector, x) -> np.ndarray:
    """Values of all grid_number + order bases at x (clamped to the range).

    Accepts a scalar or any-shape array; the basis axis is appended last.
    """
    arr = np.asarray(x, dtype=np.float64)
    clamped, _ = clamp_to_range(kv, arr)
    values = _basis_stack(kv, clamped)[-1]
    return values.reshape(arr.shape + (kv.n_bases,))


def bspline_basis_and_derivative(kv: KnotVector, x) -> tuple[np.ndarray, np.ndarray]:
    """Basis values and first derivatives at x (clamped to the range)."""
    arr = np.asarray(x, dtype=np.float64)
    clamped, _ = clamp_to_range(kv, arr)
    stack = _basis_stack(kv, clamped)
    values = stack[-1]
    k = kv.order
    if k == 0:
        derivs = np.zeros_like(values)
    else:
        t = kv.knots
        lower = stack[-2]
        n = kv.n_bases
        d1 = lower[:, :n] / (t[k : k + n] - t[:n])
        d2 = lower[:, 1 : n + 1] / (t[k + 1 : k + 1 + n] - t[1 : n + 1])
        derivs = k * (d1 - d2)
    shape = arr.shape + (kv.n_bases,)
    return values.reshape(shape), derivs.reshape(shape)


def locality_footprint(kv: KnotVector, lo: float, hi: float) -> np.ndarray:
    """Indices of every basis whose support intersects [lo, hi].

    Training on inputs confined to [lo, hi] can only move coefficients at
    these indices: all other bases evaluate to exactly 0.0 there.
    """
    if lo > hi:
        raise RangeError(f"inverted interval [{lo}, {hi}]")
    if lo < kv.range_min or hi > kv.range_max:
        raise RangeError(
            f"interval [{lo}, {hi}] outside grid range "
            f"[{kv.range_min}, {kv.range_max}]"
        )
    t = kv.knots
    k, n = kv.order, kv.n_bases
    starts = t[:n]
    ends = t[k + 1 : k + 1 + n]
    if k == 0:
        # degree-0 bases are left-closed indicators
        mask = (starts <= hi) & (ends > lo)
    else:
        mask = (starts < hi) & (ends > lo)
    return np.nonzero(mask)[0]
