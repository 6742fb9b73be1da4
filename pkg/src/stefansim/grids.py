"""Discrete functions on the truncated half-line [0, L] and the product state space.

A :class:`GridFunction` stores values at the interior nodes x_i = i*h,
i = 1..M, of a uniform grid with h = L/(M+1).  The values at x = 0 and
x = L are implicitly zero (Dirichlet constraint), which is what makes the
discrete second difference the Dirichlet Laplacian and keeps all norms
consistent with the dynamics.

A :class:`State` is the triple (u1, u2, p): right phase, reflected left
phase and boundary position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, WindowUnresolved

__all__ = [
    "Grid",
    "GridFunction",
    "State",
    "d1",
    "d2",
    "trace_grad",
    "window_mean",
    "norm",
    "state_norm",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, L] with M interior points, spacing h = L/(M+1)."""

    L: float
    M: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"domain length must be positive, got {self.L}")
        if self.M < 4:
            raise ValueError(f"need at least 4 interior points, got {self.M}")

    @property
    def h(self) -> float:
        return self.L / (self.M + 1)

    @property
    def nodes(self) -> np.ndarray:
        """Interior node positions x_i = i*h, i = 1..M."""
        return self.h * np.arange(1, self.M + 1)


def _as_values(grid: Grid, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.M,):
        raise ValueError(f"expected {grid.M} values, got shape {v.shape}")
    v = v.copy()
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class GridFunction:
    """Values of a function at the interior nodes; zero at 0 and L by convention."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.grid, self.values))

    @classmethod
    def zero(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.M))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, fn(grid.nodes))

    def padded(self) -> np.ndarray:
        """Values including the implicit zeros at x = 0 and x = L."""
        out = np.zeros(self.grid.M + 2)
        out[1:-1] = self.values
        return out

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    __rmul__ = __mul__


def _check_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise GridMismatch(f"grids differ: {f.grid} vs {g.grid}")


@dataclass(frozen=True)
class State:
    """Element (u1, u2, p) of the discrete product state space."""

    u1: GridFunction
    u2: GridFunction
    p: float

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise GridMismatch("u1 and u2 must share a grid")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @classmethod
    def zero(cls, grid: Grid) -> "State":
        return cls(GridFunction.zero(grid), GridFunction.zero(grid), 0.0)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.u1.values))
            and np.all(np.isfinite(self.u2.values))
            and math.isfinite(self.p)
        )

    def __add__(self, other: "State") -> "State":
        return State(self.u1 + other.u1, self.u2 + other.u2, self.p + other.p)

    def __sub__(self, other: "State") -> "State":
        return State(self.u1 - other.u1, self.u2 - other.u2, self.p - other.p)

    def __mul__(self, c: float) -> "State":
        return State(c * self.u1, c * self.u2, c * self.p)

    __rmul__ = __mul__


def d1(f: GridFunction) -> GridFunction:
    """Centered first difference, second order, implicit zero boundaries."""
    h = f.grid.h
    v = f.padded()
    return GridFunction(f.grid, (v[2:] - v[:-2]) / (2.0 * h))


def d2(f: GridFunction) -> GridFunction:
    """Standard 3-point second difference with implicit zero boundaries."""
    h = f.grid.h
    v = f.padded()
    return GridFunction(f.grid, (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h))


def trace_grad(f: GridFunction) -> float:
    """One-sided second-order estimate of f'(0+), using f(0) = 0."""
    h = f.grid.h
    v = f.values
    return float((4.0 * v[0] - v[1]) / (2.0 * h))


def window_mean(f: GridFunction, n: int) -> float:
    """Windowed average 2 n^2 * integral of f over [0, 1/n].

    Trapezoidal quadrature over the grid nodes inside the window, with the
    off-grid endpoint 1/n handled by linear interpolation.  Requires the
    window to span at least two cells.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    z = 1.0 / n
    h = f.grid.h
    if z < 2.0 * h:
        raise WindowUnresolved(f"window 1/n = {z} is below 2h = {2 * h}")
    xs = np.concatenate(([0.0], f.grid.nodes, [f.grid.L]))
    vs = f.padded()
    m = int(np.floor(z / h + 1e-12))
    m = min(m, f.grid.M + 1)
    x_pts = xs[: m + 1]
    v_pts = vs[: m + 1]
    if x_pts[-1] < z:
        v_end = np.interp(z, xs, vs)
        x_pts = np.append(x_pts, z)
        v_pts = np.append(v_pts, v_end)
    integral = np.trapezoid(v_pts, x_pts)
    return float(2.0 * n * n * integral)


_ORDERS = ("L2", "H1", "H2")


def norm(f: GridFunction, order: str = "L2") -> float:
    """Discrete Sobolev norm; the H1/H2 norms use the same stencils as the dynamics."""
    if order not in _ORDERS:
        raise ValueError(f"order must be one of {_ORDERS}, got {order!r}")
    h = f.grid.h
    s = h * float(np.dot(f.values, f.values))
    if order in ("H1", "H2"):
        g = d1(f).values
        s += h * float(np.dot(g, g))
    if order == "H2":
        g = d2(f).values
        s += h * float(np.dot(g, g))
    return math.sqrt(s)


def state_norm(X: State, order: str = "L2") -> float:
    """Direct-sum norm sqrt(|u1|^2 + |u2|^2 + p^2)."""
    return math.sqrt(norm(X.u1, order) ** 2 + norm(X.u2, order) ** 2 + X.p**2)
