"""Gamma and two-parameter Mittag-Leffler functions on the real line.

The Mittag-Leffler function is evaluated with one of three methods depending
on the argument:

* the power series, whenever its terms stay small enough that the
  alternating cancellation costs no more than a few digits;
* the asymptotic expansion ``-sum_k x**-k / Gamma(beta - alpha*k)`` for large
  negative arguments (``0 < alpha < 1`` only, where no exponential part
  survives on the negative axis);
* inversion of the Laplace transform ``s**(alpha-beta) / (s**alpha - x)``
  along a Talbot contour for everything else on the negative axis.

All functions accept scalars or arrays and are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

__all__ = [
    "PoleError",
    "MLQuery",
    "gamma",
    "rgamma",
    "mittag_leffler",
    "caputo_derivative_of_envelope",
]


class PoleError(ValueError):
    """Raised when the Gamma function is evaluated at a pole."""


def gamma(x: float) -> float:
    """Gamma function with explicit pole and overflow signalling."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"Gamma has a pole at {x:g}")
    try:
        return math.gamma(x)
    except OverflowError:
        raise OverflowError(f"Gamma({x:g}) overflows double precision") from None


def rgamma(x):
    """Reciprocal Gamma, zero at the poles (entire function)."""
    return sp.rgamma(x)


@dataclass(frozen=True)
class MLQuery:
    alpha: float
    beta: float
    x: float

    def __post_init__(self):
        _check_params(self.alpha, self.beta)
        if not math.isfinite(self.x):
            raise ValueError("Mittag-Leffler argument must be finite")

    def evaluate(self) -> float:
        return float(mittag_leffler(self.x, self.alpha, self.beta))


def _check_params(alpha, beta):
    if not (alpha > 0):
        raise ValueError(f"Mittag-Leffler order alpha must be > 0, got {alpha}")
    if not (beta > 0):
        raise ValueError(f"Mittag-Leffler parameter beta must be > 0, got {beta}")


# Series -------------------------------------------------------------------

_SERIES_MAX_TERMS = 500
# largest tolerated term magnitude; bounds the cancellation error by ~1e-13
_SERIES_MAX_TERM = 1e3


def _series_safe(x, alpha, beta):
    """True where the power series converges inside the term cap and, for
    negative arguments, without heavy cancellation."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    k = np.arange(_SERIES_MAX_TERMS, dtype=float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logterm = k * np.log(ax)[None, :] - sp.gammaln(alpha * k + beta)
    logterm[0] = -sp.gammaln(beta)
    # gammaln is log|Gamma|; arguments here are positive so this is exact
    peak = logterm.max(axis=0)
    safe = logterm[-1] < math.log(1e-17) + np.maximum(peak, 0.0)
    safe &= (x >= 0) | (peak <= math.log(_SERIES_MAX_TERM))
    safe |= x == 0
    return safe


def _ml_series(x, alpha, beta):
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    comp = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    with np.errstate(divide="ignore"):
        logx = np.log(np.abs(x))
    sign = np.sign(x)
    for k in range(_SERIES_MAX_TERMS):
        # x**k / Gamma(alpha k + beta) in log space so x**k cannot overflow
        if k == 0:
            term = np.full_like(x, rgamma(beta))
        else:
            term = sign**k * np.exp(k * logx - sp.gammaln(alpha * k + beta))
        # Kahan summation
        y = term - comp
        t = total + y
        comp = np.where(active, (t - total) - y, comp)
        total = np.where(active, t, total)
        active &= ~((np.abs(term) < 1e-16 * np.abs(total)) & (k > 0))
        if not active.any():
            break
    return total


# Asymptotics --------------------------------------------------------------

_ASYMPTOTIC_MIN_ABS = 50.0
_ASYMPTOTIC_MAX_TERMS = 60


def _ml_asymptotic(x, alpha, beta):
    """Asymptotic expansion for x -> -inf, 0 < alpha < 1.

    Returns (values, ok). ``ok`` marks arguments where two consecutive terms
    fell below 1e-16 of the partial sum inside the term cap; the others must
    be evaluated another way.
    """
    x = np.asarray(x, dtype=float)
    k = np.arange(1, _ASYMPTOTIC_MAX_TERMS + 1, dtype=float)[:, None]
    terms = -(x[None, :] ** -k) * rgamma(beta - alpha * k)
    partial = np.cumsum(terms, axis=0)
    tiny = np.abs(terms) <= 1e-16 * np.abs(partial)
    # single zero terms come from Gamma poles and say nothing about convergence
    converged = tiny[:-1] & tiny[1:]
    ok = converged.any(axis=0)
    stop = np.argmax(converged, axis=0)
    vals = partial[stop, np.arange(x.size)]
    return vals, ok


# Talbot contour -----------------------------------------------------------

_TALBOT_N = 40
_theta = -np.pi + (np.arange(_TALBOT_N) + 0.5) * 2 * np.pi / _TALBOT_N
_cot = 1.0 / np.tan(0.6407 * _theta)
_TALBOT_Z = _TALBOT_N * (0.5017 * _theta * _cot - 0.6122 + 0.2645j * _theta)
_TALBOT_DZ = _TALBOT_N * (
    0.5017 * _cot
    - 0.5017 * 0.6407 * _theta / np.sin(0.6407 * _theta) ** 2
    + 0.2645j
)
del _theta, _cot
# the contour crosses the positive axis at 0.171 N
_TALBOT_POLE_CLEARANCE = 0.3 * _TALBOT_N


def _ml_talbot(x, alpha, beta):
    """Inverse Laplace transform at t = 1 along a modified Talbot contour.

    For negative ``x`` the first ``K`` asymptotic terms are split off
    analytically and only the remainder
    ``z**(alpha-beta) (z**alpha/x)**K / (z**alpha - x)`` is integrated, which
    keeps the quadrature roundoff proportional to the (small) remainder.
    For positive ``x`` the real pole ``x**(1/alpha)`` lies outside the contour
    and its residue is added explicitly.
    """
    x = np.asarray(x, dtype=float)
    K = np.where(x < 0, np.minimum(5, (np.abs(x) // 4).astype(int)), 0)
    z = _TALBOT_Z[None, :]
    za = z**alpha
    xc = x[:, None].astype(complex)
    F = z ** (alpha - beta) * (za / xc) ** K[:, None] / (za - xc)
    integrand = np.exp(z) * F * _TALBOT_DZ[None, :]
    vals = (integrand.sum(axis=1) / (1j * _TALBOT_N)).real
    k = np.arange(1, 6)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = -(x[None, :] ** -k.astype(float)) * rgamma(beta - alpha * k)
    vals += np.where(k <= K[None, :], lead, 0.0).sum(axis=0)
    pos = x > 0
    if pos.any():
        pole = x[pos] ** (1.0 / alpha)
        if np.any(pole < _TALBOT_POLE_CLEARANCE):
            raise ValueError("positive argument too close to the contour crossing")
        with np.errstate(over="ignore"):
            vals[pos] += pole ** (1.0 - beta) * np.exp(pole) / alpha
    return vals


# Public -------------------------------------------------------------------


def mittag_leffler(x, alpha: float, beta: float = 1.0):
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(x)`` for real x.

    Supports every real ``x`` for ``0 < alpha <= 1``. For ``alpha > 1`` only
    arguments where the power series is well conditioned are accepted.
    """
    _check_params(alpha, beta)
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if not np.all(np.isfinite(xa)):
        raise ValueError("Mittag-Leffler argument must be finite")
    out = np.empty_like(xa)

    if alpha == 1.0 and beta == 1.0:
        out[:] = np.exp(xa)
        return float(out[0]) if scalar else out.reshape(np.shape(x))

    todo = np.ones(xa.shape, dtype=bool)
    ser = _series_safe(xa, alpha, beta)
    if ser.any():
        out[ser] = _ml_series(xa[ser], alpha, beta)
        todo &= ~ser

    if todo.any() and alpha > 1.0:
        bad = xa[todo][0]
        raise ValueError(
            f"E_{{{alpha},{beta}}}({bad}) is outside the supported range for alpha > 1"
        )

    if todo.any() and alpha < 1.0:
        big = todo & (xa <= -_ASYMPTOTIC_MIN_ABS)
        if big.any():
            vals, ok = _ml_asymptotic(xa[big], alpha, beta)
            idx = np.flatnonzero(big)[ok]
            out[idx] = vals[ok]
            todo[idx] = False

    if todo.any():
        out[todo] = _ml_talbot(xa[todo], alpha, beta)

    return float(out[0]) if scalar else out.reshape(np.shape(x))


def caputo_derivative_of_envelope(beta: float, alpha: float, c: float, t):
    """Caputo derivative of order ``alpha`` of ``t -> E_beta(-c t**beta)``.

    Closed form ``-c t**(beta-alpha) E_{beta, 1+beta-alpha}(-c t**beta)``,
    valid for ``0 < beta <= alpha <= 1``.
    """
    if not (0 < beta <= alpha <= 1):
        raise ValueError(f"need 0 < beta <= alpha <= 1, got beta={beta}, alpha={alpha}")
    if c <= 0:
        raise ValueError("rate c must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    val = -c * t ** (beta - alpha) * mittag_leffler(-c * t**beta, beta, 1 + beta - alpha)
    return float(val) if val.ndim == 0 else val
