"""Pure-numpy fallback for the hot solver kernels.

Same contracts as the compiled module ``pfaloha._kernels._cy``; bisection
runs vectorised over nodes. Per-backend results can differ in the last few
ulps because numpy uses pairwise summation while the C loops sum
sequentially.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_TINY = 1e-308  # lower bisection bracket; the fixed point is bounded away from 0
_ROW_CHUNK = 256  # bounds the (chunk, N) temporaries in the full-plane solver


def _b_matrix(X, Y, T, r, beta):
    """b[i, j] = |X_i - y_j|**beta / (T r**beta), diagonal set to +inf."""
    d2 = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(-1)
    if beta == 4.0:
        b = d2 * d2
    else:
        b = d2 ** (beta / 2.0)
    b /= T * r**beta
    np.fill_diagonal(b, np.inf)
    return b


def log_success_probs(X, Y, p, T, r, beta):
    """logq_i = sum_{j != i} log1p(-p_j / (1 + b_ji))."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    p = np.asarray(p, dtype=float)
    b = _b_matrix(X, Y, T, r, beta)
    # b[j, i] carries |X_j - y_i|; sum over interferers j is a column sum
    return np.log1p(-p[:, None] / (1.0 + b)).sum(axis=0)


def solve_fullplane(X, Y, T, r, beta, tol=1e-12, max_iter=200):
    """Per-node fixed points 1/p = sum_{j != i} 1/(1 + b_ij - p).

    Returns (p, saturated, residual, iterations). Saturated nodes
    (sum 1/b <= 1) get p = 1 and residual 0.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    p = np.ones(n)
    sat = np.zeros(n, dtype=bool)
    res = np.zeros(n)
    iters = np.zeros(n, dtype=np.int64)
    for start in range(0, n, _ROW_CHUNK):
        sl = slice(start, min(start + _ROW_CHUNK, n))
        diff = X[sl, None, :] - Y[None, :, :]
        d2 = (diff**2).sum(-1)
        b = d2 * d2 if beta == 4.0 else d2 ** (beta / 2.0)
        b /= T * r**beta
        rows = np.arange(sl.start, sl.stop)
        b[rows - sl.start, rows] = np.inf
        a = (1.0 / b).sum(1)
        sat[sl] = a <= 1.0
        pc, itc = _bisect_rows(b, tol, max_iter)
        Fc = (1.0 / (1.0 + b - pc[:, None])).sum(1)
        res_c = np.abs(1.0 / pc - Fc)
        pc[sat[sl]] = 1.0
        res_c[sat[sl]] = 0.0
        itc[sat[sl]] = 0
        p[sl] = pc
        res[sl] = res_c
        iters[sl] = itc
    return p, sat, res, iters


def _bisect_rows(b, tol, max_iter):
    """Vectorised bisection of 1/p = sum_j 1/(1 + b[i,j] - p) per row."""
    n = b.shape[0]
    lo = np.full(n, _TINY)
    hi = np.ones(n)
    iters = np.zeros(n, dtype=np.int64)
    binv = 1.0 + b
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        F = (1.0 / (binv - mid[:, None])).sum(1)
        g_pos = 1.0 / mid > F
        lo = np.where(active & g_pos, mid, lo)
        hi = np.where(active & ~g_pos, mid, hi)
        iters[active] += 1
    return 0.5 * (lo + hi), iters


def _segment_sums(values, offsets):
    """Sums of ``values`` over [offsets[k], offsets[k+1]); robust to empty segments."""
    c = np.concatenate(([0.0], np.cumsum(values)))
    return c[offsets[1:]] - c[offsets[:-1]]


def _tail_beta4(psi, outer_x, density, r, T):
    """C(psi, x) for beta = 4: pi*lam*r^2*sqrt(T)/sqrt(1-psi) * angle(x, psi).

    outer_x = outer_radius / r; x = +inf means no tail, x = 0 the full tail.
    Written with atan of the complement so psi -> 1 stays finite for x > 0.
    """
    psi = np.asarray(psi, dtype=float)
    kappa = np.pi * density * r * r * np.sqrt(T)
    one_m = np.maximum(1.0 - psi, 0.0)
    out = np.zeros(np.broadcast(psi, outer_x).shape)
    finite = np.isfinite(outer_x)
    zero = finite & (outer_x == 0.0)
    pos = finite & (outer_x > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.sqrt(one_m)
        out = np.where(zero, kappa / root * (np.pi / 2.0), out)
        ang = np.arctan(np.sqrt(T) * root / np.where(pos, outer_x, 1.0) ** 2)
        out = np.where(pos, np.where(root > 0.0, kappa / root * ang,
                                     kappa * np.sqrt(T) / np.where(pos, outer_x, 1.0) ** 2),
                       out)
    return out


def solve_views_beta4(b_flat, offsets, outer_x, density, r, T,
                      tol=1e-12, max_iter=200):
    """Batch fixed-point solve for local views under beta = 4.

    View k observes b-coefficients b_flat[offsets[k]:offsets[k+1]] plus the
    closed-form tail beyond outer_x[k] (in units of r). Returns
    (psi, saturated, residual, iterations).
    """
    b_flat = np.asarray(b_flat, dtype=float)
    offsets = np.asarray(offsets, dtype=np.int64)
    outer_x = np.asarray(outer_x, dtype=float)
    n = offsets.size - 1
    counts = np.diff(offsets)

    # saturation test: sum 1/b + psi-free tail
    inv_b = _segment_sums(1.0 / b_flat, offsets)
    tail_at_1 = np.where(outer_x == 0.0, np.inf,
                         np.where(np.isfinite(outer_x),
                                  np.pi * density * r * r * T
                                  / np.where(outer_x > 0, outer_x, 1.0) ** 2,
                                  0.0))
    a = inv_b + tail_at_1
    sat = a <= 1.0

    lo = np.full(n, _TINY)
    hi = np.ones(n)
    iters = np.zeros(n, dtype=np.int64)
    seg_id = np.repeat(np.arange(n), counts)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = ~sat & (hi - lo > tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        F = _segment_sums(1.0 / (1.0 + b_flat - mid[seg_id]), offsets)
        F += _tail_beta4(mid, outer_x, density, r, T)
        g_pos = 1.0 / mid > F
        lo = np.where(active & g_pos, mid, lo)
        hi = np.where(active & ~g_pos, mid, hi)
        iters[active] += 1
    psi = 0.5 * (lo + hi)
    F = _segment_sums(1.0 / (1.0 + b_flat - psi[seg_id]), offsets)
    F += _tail_beta4(psi, outer_x, density, r, T)
    res = np.abs(1.0 / psi - F)
    psi[sat] = 1.0
    res[sat] = 0.0
    iters[sat] = 0
    return psi, sat, res, iters
