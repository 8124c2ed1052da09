"""Shared numerical kernels: bracketed root finding, semi-infinite
quadrature, and Fourier-type inversion of characteristic functions.

Quadrature is backed by scipy's adaptive integrators behind explicit
tolerance contracts; everything is deterministic (identical inputs give
bit-identical outputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

__all__ = [
    "QuadConfig",
    "NumericsError",
    "bisect",
    "integrate_semi_infinite",
    "fourier_inversion",
    "fourier_cdf_batch",
]


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_depth: int = 50
    fourier_tail_tol: float = 1e-6

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.fourier_tail_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 10:
            raise ValueError("max_depth must be >= 10")


class NumericsError(RuntimeError):
    """Quadrature or inversion failure; ``partial`` holds the best estimate."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def bisect(f, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Root of a continuous sign-changing f on [lo, hi] to within ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")
    lo_pos = flo > 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= tol:
            break
        if (f(mid) > 0) == lo_pos:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _quad(f, a, b, cfg, limit=200):
    """scipy.integrate.quad with the failure message surfaced."""
    out = quad(f, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
               limit=limit, full_output=1)
    message = out[3] if len(out) > 3 else None
    return out[0], out[1], message


def integrate_semi_infinite(g, x0: float, cfg: QuadConfig = QuadConfig()):
    """Integral of g over [x0, inf) for integrands with power-law decay.

    The tail beyond max(1, 2*x0) is mapped to a finite interval by u = 1/s.
    Returns (value, error_estimate); raises NumericsError when the adaptive
    scheme reports non-convergence (the partial estimate is attached).
    """
    split = max(1.0, 2.0 * x0)
    v1, e1, m1 = _quad(g, x0, split, cfg)
    v2, e2, m2 = _quad(lambda u: g(1.0 / u) / (u * u), 0.0, 1.0 / split, cfg)
    value = v1 + v2
    if m1 or m2:
        raise NumericsError(f"semi-infinite quadrature did not converge: {m1 or m2}",
                            partial=value)
    return value, e1 + e2


# ----------------------------------------------------------------------------
# Fourier inversion
#
# P(X < z) is recovered from F(w) = E exp(-iwX) by pairing with the indicator
# of [0, z] (Plancherel-Parseval), reduced to w > 0 through the conjugate
# symmetry of both factors:
#
#   P = atoms_below(z) + (1/pi) Int_0^inf Re[(F - A)(w) (e^{iwz}-1)/(iw)] dw,
#
# where A is the transform of the declared point masses. The raw pairing
# would give an atom at an interval endpoint (notably 0, the void probability
# of a shot noise) only half its weight, and an undamped atom oscillation
# never converges under octave doubling - hence the explicit declaration.
# ----------------------------------------------------------------------------


def _indicator_parts(w, z):
    """Real/imag parts of (e^{iwz}-1)/(iw); stable for w -> 0 (w > 0 assumed)."""
    wz = w * z
    re = np.sinc(wz / np.pi) * z  # = sin(wz)/w
    im = 2.0 * np.sin(0.5 * wz) ** 2 / w
    return re, im


def _atoms_transform(w, atoms):
    out = np.zeros_like(np.asarray(w, dtype=float), dtype=complex)
    for loc, mass in atoms:
        out = out + mass * np.exp(-1j * np.asarray(w, dtype=float) * loc)
    return out


def _atoms_below(z, atoms):
    return sum(mass for loc, mass in atoms if 0.0 <= loc < z)


def _check_char_fn(char_fn, atoms):
    probe = np.array([0.0, 0.37, 1.7, 11.3])
    vals = np.atleast_1d(np.asarray(char_fn(probe), dtype=complex))
    if abs(vals[0] - 1.0) > 1e-8:
        raise ValueError(f"characteristic function is {vals[0]} at 0, expected 1")
    if np.abs(vals).max() > 1.0 + 1e-8:
        raise ValueError("characteristic function has modulus > 1")
    if any(m < 0 for _, m in atoms) or sum(m for _, m in atoms) > 1.0 + 1e-12:
        raise ValueError("atom masses must be nonnegative with total <= 1")


def _tail_bound(m_last, b, z_min):
    # integration by parts: |Int_b^inf g (e^{iwz}-1)/(iw)| <~ 2|g(b)|/b * (1/z + 1)
    return 2.0 * m_last / b * (1.0 / max(z_min, 1e-2) + 1.0)


def _finish_probability(value, what):
    if value < -1e-4 or value > 1.0 + 1e-4:
        raise NumericsError(f"{what} outside [0,1] beyond tolerance: {value}",
                            partial=value)
    return min(max(value, 0.0), 1.0)


def fourier_inversion(char_fn, threshold: float, cfg: QuadConfig = QuadConfig(),
                      atoms=()) -> float:
    """P(X < threshold) for a nonnegative random variable from its transform.

    ``char_fn(w)`` must return E[exp(-i w X)] and accept scalars or arrays.
    Integration runs over octaves (0,1], (1,2], (2,4], ... until either the
    last octave contributes less than ``cfg.fourier_tail_tol`` or the
    integration-by-parts tail bound drops below it. Known point masses must
    be declared via ``atoms=((location, mass), ...)``; they are counted
    exactly and subtracted from the transform before quadrature.
    """
    if threshold <= 0.0:
        return 0.0
    _check_char_fn(char_fn, atoms)
    z = float(threshold)

    def integrand(w):
        F = complex(np.asarray(char_fn(w), dtype=complex).reshape(()))
        F -= complex(_atoms_transform(w, atoms).reshape(()))
        re, im = _indicator_parts(w, z)
        return F.real * re - F.imag * im

    def remainder_mod(w):
        vals = np.asarray(char_fn(w), dtype=complex) - _atoms_transform(w, atoms)
        return float(np.abs(np.atleast_1d(vals)).max())

    total = 0.0
    a, b = 0.0, 1.0
    small_streak = 0
    converged = False
    for _ in range(cfg.max_depth):
        val, _, message = _quad(integrand, a, b, cfg, limit=400)
        if message is not None:
            raise NumericsError(f"Fourier octave [{a}, {b}] failed: {message}",
                                partial=total / math.pi)
        total += val
        small_streak = small_streak + 1 if abs(val) < cfg.fourier_tail_tol else 0
        m_last = max(remainder_mod(np.array([b * f for f in (0.81, 0.93, 1.0)])), 0.0)
        if _tail_bound(m_last, b, z) < 10 * cfg.fourier_tail_tol or (
                small_streak >= 2 and b >= 8.0):
            converged = True
            break
        a, b = b, 2.0 * b
    if not converged:
        raise NumericsError("Fourier tail did not converge", partial=total / math.pi)
    value = _atoms_below(z, atoms) + total / math.pi
    return _finish_probability(value, "fourier_inversion result")


@lru_cache(maxsize=None)
def _gl_nodes(n=32):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def fourier_cdf_batch(char_fn, thresholds, cfg: QuadConfig = QuadConfig(),
                      atoms=(), freq_hint: float = 1.0) -> np.ndarray:
    """Vectorised P(X < z) over many thresholds sharing one transform.

    Composite Gauss-Legendre panels are sized for ~4 nodes per oscillation at
    frequency ``max(thresholds) + freq_hint`` (pass the spread of the law as
    the hint); char_fn is evaluated once per node and reused across all
    thresholds. Octave doubling, atom handling and stopping rules match
    :func:`fourier_inversion`. Thresholds <= 0 yield 0.
    """
    z = np.asarray(thresholds, dtype=float).reshape(-1)
    out = np.zeros(z.shape)
    pos = z > 0.0
    if not pos.any():
        return out
    _check_char_fn(char_fn, atoms)
    zp = z[pos]
    freq = max(float(freq_hint), 1e-2) + zp.max()
    xg, wg = _gl_nodes()
    per_panel = 2.0 * np.pi / freq * 8.0  # ~8 oscillations per 32-node panel

    totals = np.zeros(zp.shape)
    a, b = 0.0, 1.0
    small_streak = 0
    converged = False
    for _ in range(cfg.max_depth):
        n_pan = max(1, int(np.ceil((b - a) / per_panel)))
        if n_pan > 65536:
            raise NumericsError("Fourier panel budget exhausted", partial=None)
        edges = np.linspace(a, b, n_pan + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        halves = 0.5 * np.diff(edges)
        w_nodes = (mids[:, None] + halves[:, None] * xg[None, :]).ravel()
        w_wts = (halves[:, None] * wg[None, :]).ravel()
        G = np.asarray(char_fn(w_nodes), dtype=complex) - _atoms_transform(w_nodes, atoms)
        wz = np.outer(w_nodes, zp)
        re = np.sin(wz) / w_nodes[:, None]
        im = 2.0 * np.sin(0.5 * wz) ** 2 / w_nodes[:, None]
        octave = (w_wts[:, None] * (G.real[:, None] * re - G.imag[:, None] * im)).sum(axis=0)
        totals += octave
        worst = np.abs(octave).max()
        small_streak = small_streak + 1 if worst < cfg.fourier_tail_tol else 0
        m_last = float(np.abs(G[-64:]).max())
        if _tail_bound(m_last, b, zp.min()) < 10 * cfg.fourier_tail_tol or (
                small_streak >= 2 and b >= 8.0):
            converged = True
            break
        a, b = b, 2.0 * b
    if not converged:
        raise NumericsError("Fourier tail did not converge", partial=None)

    vals = np.array([_atoms_below(zi, atoms) for zi in zp]) + totals / math.pi
    if vals.min() < -1e-4 or vals.max() > 1.0 + 1e-4:
        raise NumericsError(f"batch inversion outside [0,1] beyond tolerance "
                            f"(range [{vals.min():.6g}, {vals.max():.6g}])",
                            partial=vals)
    out[pos] = np.clip(vals, 0.0, 1.0)
    return out
