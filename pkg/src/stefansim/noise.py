"""Discretized cylindrical Wiener increments and the coloring operator.

The cylindrical increment over one step is a vector of iid N(0, dt/dy)
variates on an ambient real-line grid; the coloring kernel turns it into the
increment of the driving field xi at arbitrary points by quadrature of
integral of zeta(x, y) dW(y).  Kernels are evaluated in closed form at the
shifted points p +/- x_i, so no interpolation error enters the noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BoundaryLeftWindow
from .grids import Grid

__all__ = [
    "AmbientGrid",
    "Kernel",
    "gaussian_kernel",
    "NoiseIncrement",
    "NoiseStream",
    "sample_increment",
    "color_at",
    "color_field",
]


@dataclass(frozen=True)
class AmbientGrid:
    """Uniform grid covering the window of the real line seen by the boundary."""

    x_lo: float
    x_hi: float
    J: int

    def __post_init__(self):
        if self.J < 2:
            raise ValueError("need at least two ambient nodes")
        if not self.x_hi > self.x_lo:
            raise ValueError("empty ambient window")

    @property
    def dy(self) -> float:
        return (self.x_hi - self.x_lo) / (self.J - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.J)

    def covers(self, p: float, L: float) -> bool:
        return self.x_lo <= p - L and p + L <= self.x_hi


@dataclass(frozen=True)
class Kernel:
    """Coloring kernel zeta with its L2-in-y profile on a reference grid.

    ``zeta`` must accept broadcasting arrays (x, y).  The profile is used for
    construction-time validation and as the analytic-variance oracle in tests.
    """

    zeta: Callable[[np.ndarray, np.ndarray], np.ndarray]
    l2_profile: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, zeta, ambient: AmbientGrid) -> "Kernel":
        ys = ambient.nodes
        rows = zeta(ys[:, None], ys[None, :])
        profile = np.sqrt(np.sum(rows * rows, axis=1) * ambient.dy)
        if not np.all(np.isfinite(profile)):
            raise ValueError("kernel L2 profile is not finite on the ambient window")
        return cls(zeta=zeta, l2_profile=profile)


def gaussian_kernel(scale: float, ambient: Optional[AmbientGrid] = None):
    """Gaussian convolution kernel (2 pi s^2)^(-1/2) exp(-(x-y)^2 / (2 s^2))."""
    if scale <= 0:
        raise ValueError("kernel scale must be positive")
    c = 1.0 / math.sqrt(2.0 * math.pi * scale * scale)

    def zeta(x, y):
        d = np.asarray(x) - np.asarray(y)
        return c * np.exp(-d * d / (2.0 * scale * scale))

    if ambient is None:
        return zeta
    return Kernel.build(zeta, ambient)


@dataclass(frozen=True)
class NoiseIncrement:
    dW: np.ndarray
    step_index: int
    dt: float

    def __post_init__(self):
        v = np.asarray(self.dW, dtype=float).copy()
        v.setflags(write=False)
        object.__setattr__(self, "dW", v)


@dataclass(frozen=True)
class NoiseStream:
    """Deterministic per-trajectory noise source, replayable by step index.

    The same (seed, trajectory_id, step_index) always yields the same
    increment, independently of how many steps were consumed before; this is
    what lets every member of the interface family n see the identical noise.
    """

    seed: int
    trajectory_id: int = 0

    def increment(self, step_index: int, dt: float, ambient: AmbientGrid) -> NoiseIncrement:
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.trajectory_id, step_index))
        rng = np.random.default_rng(ss)
        dW = rng.normal(0.0, math.sqrt(dt / ambient.dy), ambient.J)
        return NoiseIncrement(dW=dW, step_index=step_index, dt=dt)


def sample_increment(stream: NoiseStream, step_index: int, dt: float, ambient: AmbientGrid) -> NoiseIncrement:
    return stream.increment(step_index, dt, ambient)


def color_at(kernel: Kernel, ambient: AmbientGrid, inc: NoiseIncrement, x):
    """Increment of the colored field at x: quadrature of zeta(x, .) against dW."""
    xs = np.asarray(x, dtype=float)
    weights = kernel.zeta(xs[..., None], ambient.nodes)
    out = weights @ inc.dW * ambient.dy
    if out.ndim == 0:
        return float(out)
    return out


def color_field(kernel: Kernel, ambient: AmbientGrid, inc: NoiseIncrement, p: float, grid: Grid):
    """Colored increments at p + x_i and p - x_i for the two phases."""
    if not ambient.covers(p, grid.L):
        raise BoundaryLeftWindow(
            f"boundary at {p} with half-width {grid.L} leaves window [{ambient.x_lo}, {ambient.x_hi}]"
        )
    xs = grid.nodes
    xi_plus = color_at(kernel, ambient, inc, p + xs)
    xi_minus = color_at(kernel, ambient, inc, p - xs)
    return xi_plus, xi_minus
