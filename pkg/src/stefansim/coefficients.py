"""Model coefficients and the nonlinear parts of the evolution equation.

Assembles the drift (pointwise reaction, interface-driven transport, identity
shift) and the multiplicative diffusion, together with the smooth cutoff used
to localize both.  Sign conventions for the reflected left phase: its spatial
argument is -x and its slope argument carries the reflection sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import WindowUnresolved
from .grids import GridFunction, State, d1, norm, state_norm, trace_grad, window_mean
from .noise import AmbientGrid, Kernel, NoiseIncrement, color_field

__all__ = [
    "CoefficientSet",
    "TruncationSpec",
    "N_mu",
    "Psi_n",
    "grad_bar",
    "drift_B",
    "diffusion_C",
    "h_r",
    "psi_gap_bound",
    "mu_zero",
    "mu_linear",
    "mu_saturated",
    "mu_quadratic",
    "sigma_zero",
    "sigma_affine",
    "rho_linear",
    "rho_tanh",
    "rho_zero",
]

INF = math.inf


@dataclass(frozen=True)
class CoefficientSet:
    """Validated model data: diffusivities, reaction, noise amplitude, interface map.

    ``rho_lipschitz`` maps a radius to a Lipschitz constant of rho on the
    centered ball of that radius; the assumptions grant its existence and the
    lemma-level tests need it explicitly.
    """

    eta_plus: float
    eta_minus: float
    mu_plus: Callable
    mu_minus: Callable
    sigma_plus: Callable
    sigma_minus: Callable
    rho: Callable[[float, float], float]
    rho_lipschitz: Callable[[float], float]
    kernel: Kernel
    rho_bounded: bool = False
    sigma_affine_flag: bool = False
    mu_bounded_slopes: bool = False

    def __post_init__(self):
        if not (self.eta_plus > 0 and self.eta_minus > 0):
            raise ValueError("diffusivities must be positive")
        for name, s in (("sigma_plus", self.sigma_plus), ("sigma_minus", self.sigma_minus)):
            val = float(s(np.array(0.0), np.array(0.0)))
            if abs(val) > 1e-12:
                raise ValueError(f"{name}(0, 0) = {val} violates the interface condition")


@dataclass(frozen=True)
class TruncationSpec:
    """Radius of the smooth cutoff; the transition lives on [r^2, (r+1)^2] in squared norm."""

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("truncation radius must be positive")


def h_r(spec: TruncationSpec, s: float) -> float:
    """Quintic-smoothstep cutoff of the squared norm: 1 below r^2, 0 above (r+1)^2."""
    if s < 0:
        raise ValueError("squared norm must be nonnegative")
    r = spec.r
    lo, hi = r * r, (r + 1.0) * (r + 1.0)
    if s <= lo:
        return 1.0
    if s >= hi:
        return 0.0
    t = (s - lo) / (hi - lo)
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def N_mu(c: CoefficientSet, X: State) -> State:
    """Pointwise reaction (mu+(x, u1, u1'), mu-(-x, u2, -u2'), 0)."""
    g = X.grid
    x = g.nodes
    s1 = c.mu_plus(x, X.u1.values, d1(X.u1).values)
    s2 = c.mu_minus(-x, X.u2.values, -d1(X.u2).values)
    return State(
        GridFunction(g, np.broadcast_to(s1, (g.M,))),
        GridFunction(g, np.broadcast_to(s2, (g.M,))),
        0.0,
    )


def Psi_n(c: CoefficientSet, X: State, n) -> float:
    """Interface speed: windowed volume imbalance for finite n, gradient jump at n = inf."""
    if n == INF:
        return float(c.rho(trace_grad(X.u1), -trace_grad(X.u2)))
    return float(c.rho(window_mean(X.u1, n), -window_mean(X.u2, n)))


def grad_bar(X: State) -> State:
    """Transport direction (u1', -u2', 1)."""
    return State(d1(X.u1), -1.0 * d1(X.u2), 1.0)


def drift_B(c: CoefficientSet, X: State, n, spec: Optional[TruncationSpec] = None) -> State:
    """Full drift N_mu + Psi_n * grad_bar + Id, optionally cut off outside the norm ball."""
    psi = Psi_n(c, X, n)
    out = N_mu(c, X) + psi * grad_bar(X) + X
    if spec is not None:
        f = h_r(spec, state_norm(X, "H2") ** 2)
        if f != 1.0:
            out = f * out
    return out


def diffusion_C(
    c: CoefficientSet,
    X: State,
    inc: NoiseIncrement,
    ambient: AmbientGrid,
    spec: Optional[TruncationSpec] = None,
) -> State:
    """Multiplicative noise increment (sigma+(x, u1) xi+, sigma-(-x, u2) xi-, 0)."""
    g = X.grid
    xi_plus, xi_minus = color_field(c.kernel, ambient, inc, X.p, g)
    x = g.nodes
    s1 = np.broadcast_to(c.sigma_plus(x, X.u1.values), (g.M,)) * xi_plus
    s2 = np.broadcast_to(c.sigma_minus(-x, X.u2.values), (g.M,)) * xi_minus
    out = State(GridFunction(g, s1), GridFunction(g, s2), 0.0)
    if spec is not None:
        f = h_r(spec, state_norm(X, "H2") ** 2)
        if f != 1.0:
            out = f * out
    return out


def psi_gap_bound(c: CoefficientSet, X: State, n: int):
    """Distance between the finite-n and limiting drifts, with its a-priori bound.

    Returns (gap, bound) where gap is the H1-state norm of B_n - B_inf at X
    and the bound is the 1/sqrt(n) estimate with an O(h) slack factor for the
    discrete norms.  Requires the window to span at least ten cells so the
    rate statement is meaningful on the grid.
    """
    h = X.grid.h
    if 1.0 / n < 10.0 * h:
        raise WindowUnresolved(f"window 1/n = {1 / n} is below 10h = {10 * h}")
    gap = state_norm(drift_B(c, X, n) - drift_B(c, X, INF), "H1")
    R = state_norm(X, "H2")
    bound = c.rho_lipschitz(2.0 * R) * R * (1.0 + R) * (1.0 + 10.0 * h) / math.sqrt(n)
    return gap, bound


# ---------------------------------------------------------------------------
# Builtin coefficient families (selected by name from experiment configs)

def mu_zero():
    return lambda x, v, vp: np.zeros_like(np.asarray(v, dtype=float))


def mu_linear(c_v: float = 0.0, c_vp: float = 0.0):
    return lambda x, v, vp: c_v * v + c_vp * vp


def mu_saturated(amplitude: float = 1.0, slope: float = 1.0):
    """Bounded reaction with bounded slopes, tanh in both v and v'."""
    return lambda x, v, vp: amplitude * np.tanh(slope * v) + amplitude * np.tanh(slope * vp)


def mu_quadratic(coeff: float = 1.0):
    """v^2 reaction; locally Lipschitz only, used for explosion demonstrations."""
    return lambda x, v, vp: coeff * v * v


def sigma_zero():
    return lambda x, v: np.zeros_like(np.asarray(v, dtype=float))


def sigma_affine(additive: float = 0.0, multiplicative: float = 0.0, width: float = 1.0):
    """sigma(x, v) = additive * x exp(-x^2 / (2 w^2)) + multiplicative * v.

    The additive profile vanishes at x = 0 and decays, so the interface
    condition sigma(0, 0) = 0 holds and the additive part is square
    integrable with two derivatives.
    """

    def sigma(x, v):
        xa = np.asarray(x, dtype=float)
        return additive * xa * np.exp(-xa * xa / (2.0 * width * width)) + multiplicative * v

    return sigma


def rho_zero():
    return (lambda a, b: 0.0), (lambda r: 0.0)


def rho_linear(rho0: float = 1.0):
    lip = abs(rho0) * math.sqrt(2.0)
    return (lambda a, b: rho0 * (a - b)), (lambda r: lip)


def rho_tanh(rho0: float = 1.0, slope: float = 1.0):
    """Bounded interface map rho0 * tanh(slope * (a - b))."""
    lip = abs(rho0) * slope * math.sqrt(2.0)
    return (lambda a, b: rho0 * math.tanh(slope * (a - b))), (lambda r: lip)
