"""Fixed-point solvers for the proportionally fair medium access
probability.

The optimal MAP of a node observing receivers with coefficients b_j inside
its information region, with the rest of the plane unobserved beyond radius
x*r, is the unique root in (0, 1) of

    1/psi = sum_j 1/(1 + b_j - psi) + C(psi, x),

where C is the density-weighted tail integral over the unobserved region;
the node transmits always (psi = 1) when the right side stays at or below 1
on [0, 1]. The finite-window problem is the same equation per node with all
in-window receivers observed and no tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import MapAssignment, ModelParams, NetworkRealization, cross_distances
from .numerics import QuadConfig, bisect, integrate_semi_infinite
from .stopping import LocalView

__all__ = [
    "SolveResult",
    "tail_integral_C",
    "rhs_F",
    "threshold_a",
    "solve_map",
    "closed_form_empty",
    "solve_finite_window",
    "solve_views",
]

_LO = 1e-308  # lower bisection bracket: root is bounded away from 0


@dataclass(frozen=True)
class SolveResult:
    psi: float
    saturated: bool
    residual: float
    iterations: int


def tail_integral_C(psi: float, x: float, params: ModelParams,
                    cfg: QuadConfig = QuadConfig()) -> float:
    """C(psi, x) = 2*pi*lam*r^2 * Int_x^inf s / (s^beta/T + 1 - psi) ds.

    x is the unobserved-region radius in units of r (inf disables the tail).
    Closed form for beta = 4; adaptive semi-infinite quadrature otherwise.
    The integral diverges at psi = 1 with x = 0.
    """
    if not 0.0 <= psi <= 1.0:
        raise ValueError(f"psi must be in [0, 1], got {psi}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if math.isinf(x):
        return 0.0
    lam, r, beta, T = params.density, params.r, params.beta, params.sinr_threshold
    if psi == 1.0:
        if x == 0.0:
            raise ValueError("tail integral diverges at psi = 1 with x = 0")
        return 2.0 * math.pi * lam * r * r * T * x ** (2.0 - beta) / (beta - 2.0)
    if beta == 4.0:
        root = math.sqrt(1.0 - psi)
        kappa = math.pi * lam * r * r * math.sqrt(T) / root
        if x == 0.0:
            return kappa * (math.pi / 2.0)
        # pi/2 - atan(x^2/sqrt(T(1-psi))) written as atan of the reciprocal
        return kappa * math.atan(math.sqrt(T) * root / (x * x))
    value, _ = integrate_semi_infinite(
        lambda s: s / (s**beta / T + 1.0 - psi), x, cfg)
    return 2.0 * math.pi * lam * r * r * value


def rhs_F(psi: float, view: LocalView, params: ModelParams,
          cfg: QuadConfig = QuadConfig()) -> float:
    """Right side of the fixed-point equation at psi for the given view."""
    s = float((1.0 / (1.0 + view.observed_b - psi)).sum())
    return s + tail_integral_C(psi, view.outer_radius / params.r, params, cfg)


def threshold_a(view: LocalView, params: ModelParams) -> float:
    """Transmission-throttling threshold a = sum_j 1/b_j + psi-free tail.

    The node saturates (psi = 1) iff a <= 1. Equals the limit of rhs_F at
    psi -> 1; +inf for the empty view (its tail integral diverges at the
    origin), so an uninformed node never saturates.
    """
    s = float((1.0 / view.observed_b).sum())
    x = view.outer_radius / params.r
    if math.isinf(x):
        return s
    if x == 0.0:
        return math.inf
    lam, r, beta, T = params.density, params.r, params.beta, params.sinr_threshold
    return s + 2.0 * math.pi * lam * r * r * T * x ** (2.0 - beta) / (beta - 2.0)


def solve_map(view: LocalView, params: ModelParams, tol: float = 1e-12,
              cfg: QuadConfig = QuadConfig(), max_iter: int = 200) -> SolveResult:
    """Optimal MAP for one view: saturation check, then bisection.

    Left side 1/psi falls from +inf to 1 while the right side rises to the
    threshold a, so the root is unique and bracketed on (0, 1).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if threshold_a(view, params) <= 1.0:
        return SolveResult(1.0, True, 0.0, 0)

    def g(psi):
        return 1.0 / psi - rhs_F(psi, view, params, cfg)

    hi = 1.0 - 1e-14
    if g(hi) >= 0.0:
        # threshold barely above 1: the root is within rounding of 1
        return SolveResult(hi, False, abs(g(hi)), 0)
    iterations = 0

    def g_counting(psi):
        nonlocal iterations
        iterations += 1
        return g(psi)

    psi = bisect(g_counting, _LO, hi, tol, max_iter=max_iter)
    return SolveResult(psi, False, abs(g(psi)), iterations)


def closed_form_empty(params: ModelParams) -> float:
    """MAP of an uninformed node for beta = 4:

        psi = (sqrt(1 + 4 a^2) - 1) / (2 a^2),  a = pi^2 lam r^2 sqrt(T) / 2.
    """
    if params.beta != 4.0:
        raise ValueError("closed form requires beta = 4")
    a = math.pi**2 * params.density * params.r**2 * math.sqrt(params.sinr_threshold) / 2.0
    return (math.sqrt(1.0 + 4.0 * a * a) - 1.0) / (2.0 * a * a)


def solve_finite_window(realization: NetworkRealization, params: ModelParams,
                        tol: float = 1e-12, max_iter: int = 200) -> MapAssignment:
    """Jointly optimal MAPs for all nodes of a finite pattern.

    The objective is separable, so each p_i solves its own scalar equation
    1/p_i = sum_{j != i} 1/(1 + b_ij - p_i) with b_ij built from |X_i - y_j|
    (node i's pressure on receiver j); p_i = 1 when sum_j 1/b_ij <= 1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if realization.n_nodes == 0:
        return MapAssignment(np.empty(0))
    p, _, _, _ = _kernels.solve_fullplane(
        realization.transmitters, realization.receivers,
        params.sinr_threshold, params.r, params.beta, tol, max_iter)
    return MapAssignment(p)


def solve_finite_window_detailed(realization: NetworkRealization,
                                 params: ModelParams, tol: float = 1e-12,
                                 max_iter: int = 200):
    """solve_finite_window plus saturation flags and residuals."""
    p, sat, res, iters = _kernels.solve_fullplane(
        realization.transmitters, realization.receivers,
        params.sinr_threshold, params.r, params.beta, tol, max_iter)
    return MapAssignment(p), sat, res, iters


def solve_views(b_flat, offsets, outer_x, params: ModelParams,
                tol: float = 1e-12, max_iter: int = 200):
    """Batch solve over flattened views (see stopping.local_views).

    beta = 4 runs through the compiled/vectorised kernel; other exponents
    fall back to per-view scalar solves with quadrature tails.
    Returns (psi, saturated, residual, iterations) arrays.
    """
    if params.beta == 4.0:
        return _kernels.solve_views_beta4(
            np.ascontiguousarray(b_flat, dtype=float),
            np.ascontiguousarray(offsets, dtype=np.int64),
            np.ascontiguousarray(outer_x, dtype=float),
            params.density, params.r, params.sinr_threshold, tol, max_iter)
    n = len(outer_x)
    psi = np.empty(n)
    sat = np.zeros(n, dtype=bool)
    res = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    for k in range(n):
        view = LocalView(np.sort(b_flat[offsets[k]:offsets[k + 1]]),
                         outer_x[k] * params.r)
        out = solve_map(view, params, tol, max_iter=max_iter)
        psi[k], sat[k], res[k], iters[k] = out.psi, out.saturated, out.residual, out.iterations
    return psi, sat, res, iters
