"""Fractional Adams-Bashforth-Moulton integration of delay systems.

Each component ``i`` is advanced on the Volterra form

    w_i(t) = phi_i(0) + 1/Gamma(alpha_i) int_0^t (t-s)^(alpha_i-1) F_i(s) ds

with a product-rectangle predictor and a product-trapezoidal corrector on a
uniform grid. Delayed states are read back from the already computed part of
the trajectory by linear interpolation, or from ``phi`` for negative times.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .system import InitialCondition, SystemSpec

__all__ = [
    "SolverConfig",
    "Trajectory",
    "DivergenceError",
    "abm_weights",
    "memory_sums",
    "solve",
]

# states in [-CLAMP_TOL, 0) are rounding noise and are set to zero
CLAMP_TOL = 1e-9
DIVERGENCE_BOUND = 1e12


@dataclass(frozen=True)
class SolverConfig:
    h: float = 1e-3
    T: float = 20.0
    corrector_iterations: int = 1

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if not self.h > 0:
            raise ValueError(f"step h must be positive, got {self.h}")
        if self.h > self.T:
            raise ValueError("step h exceeds the horizon T")
        if not 1 <= self.corrector_iterations <= 5:
            raise ValueError("corrector_iterations must be between 1 and 5")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.T / self.h)))

    def check(self, system: SystemSpec):
        if system.delay_terms and self.h > system.r / 2:
            raise ValueError(f"step h={self.h} must be at most r/2={system.r / 2}")


@dataclass
class Trajectory:
    """Solution on ``[0, T]`` plus the history it started from."""

    t: np.ndarray
    states: np.ndarray
    phi: InitialCondition
    r: float
    h: float
    warnings: list = field(default_factory=list)
    n_valid: int | None = None
    diverged: bool = False

    def __post_init__(self):
        if self.n_valid is None:
            self.n_valid = len(self.t)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def T(self) -> float:
        return float(self.t[self.n_valid - 1])

    def history_grid(self) -> np.ndarray:
        """Times in ``[-r, 0)`` at which the history is sampled."""
        g = self.phi.grid(self.r, self.h)
        return g[g < 0]

    def lookup(self, s: float) -> np.ndarray:
        s = float(s)
        if s < -self.r - 1e-12 or s > self.T + 1e-12:
            raise ValueError(f"lookup at t={s} outside [-{self.r}, {self.T}]")
        if s <= 0:
            return self.phi(min(s, 0.0)) if s < 0 else self.states[0].copy()
        k = int(s / self.h)
        k = min(k, self.n_valid - 1)
        tk = self.t[k]
        if s == tk or k == self.n_valid - 1:
            return self.states[k].copy()
        theta = (s - tk) / self.h
        return (1 - theta) * self.states[k] + theta * self.states[k + 1]

    def truncated(self) -> "Trajectory":
        n = self.n_valid
        return Trajectory(self.t[:n], self.states[:n], self.phi, self.r, self.h,
                          list(self.warnings), diverged=self.diverged)


class DivergenceError(RuntimeError):
    def __init__(self, message, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def abm_weights(alpha: float, n: int, h: float = 1.0):
    """Predictor and corrector weights for the step that produces ``w_n``.

    Returns ``(b, a)`` where ``b[k]``, k = 0..n-1, multiplies ``F_k`` in the
    predictor and ``a[k]``, k = 0..n, multiplies ``F_k`` in the corrector
    (``a[n]`` for the predicted value). Both include ``h**alpha`` and the
    Gamma normalisation.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n, dtype=float)
    b = ((n - k) ** alpha - (n - 1 - k) ** alpha) * h**alpha / math.gamma(alpha + 1)
    m = n - k[1:]
    a = np.empty(n + 1)
    a[0] = (n - 1) ** (alpha + 1) - (n - 1 - alpha) * n**alpha
    a[1:n] = (m + 1) ** (alpha + 1) + (m - 1) ** (alpha + 1) - 2 * m ** (alpha + 1)
    a[n] = 1.0
    a *= h**alpha / math.gamma(alpha + 2)
    return b, a


def _weight_tables(alpha, N, h):
    """Lag-indexed tables so that the step-n weights are slices."""
    m = np.arange(N + 2, dtype=float)
    pred = np.zeros(N + 1)
    pred[1:] = m[1 : N + 1] ** alpha - m[: N] ** alpha
    pred *= h**alpha / math.gamma(alpha + 1)
    corr = np.zeros(N + 1)
    corr[1:] = m[2 : N + 2] ** (alpha + 1) + m[: N] ** (alpha + 1) - 2 * m[1 : N + 1] ** (alpha + 1)
    corr *= h**alpha / math.gamma(alpha + 2)
    return pred, corr


def _corr_start(alpha, n, h):
    return ((n - 1) ** (alpha + 1) - (n - 1 - alpha) * n**alpha) * h**alpha / math.gamma(alpha + 2)


def memory_sums(F, n, pred_table, corr_table, corr_first):
    """History parts of the predictor and corrector for target index ``n``.

    ``F[k]`` (k < n) are the stored right-hand sides of one component. The
    corrector sum has exactly ``n`` terms, k = 0..n-1.
    """
    past = F[:n]
    pred = np.dot(pred_table[n:0:-1], past)
    corr = corr_first * past[0]
    if n > 1:
        corr += np.dot(corr_table[n - 1 : 0 : -1], past[1:])
    return pred, corr


def solve(system: SystemSpec, phi: InitialCondition, config: SolverConfig) -> Trajectory:
    """Integrate ``system`` from history ``phi`` up to ``config.T``.

    Raises :class:`DivergenceError` (carrying the partial trajectory) if a
    state leaves the ball of radius 1e12.
    """
    config.check(system)
    d = system.dim
    if phi.dim != d:
        raise ValueError(f"history has dimension {phi.dim}, system has {d}")
    if phi.samples is not None and phi.r < system.r - 1e-12:
        raise ValueError(f"sampled history covers [-{phi.r}, 0] but the delays need [-{system.r}, 0]")

    N = config.n_steps
    h = config.T / N
    t = np.arange(N + 1) * h
    t[-1] = config.T
    W = np.zeros((N + 1, d))
    F = np.zeros((d, N + 1))
    W[0] = phi(0.0)
    w0 = W[0].copy()
    alphas = system.orders
    tables = [_weight_tables(a, N, h) for a in alphas]
    gnorm = [h**a / math.gamma(a + 2) for a in alphas]
    traj = Trajectory(t, W, phi, system.r, h, [], n_valid=1)
    messages: dict = {}
    n_clamped = 0
    delays = system.delay_terms

    def past(s, n, w_pred):
        # w(s) for s <= t_n using rows < n and the current predictor for row n
        if s <= 0:
            return phi(s) if s < 0 else w0
        k = int(s / h)
        if k >= n:
            return w_pred
        theta = (s - k * h) / h
        upper = w_pred if k + 1 == n else W[k + 1]
        if theta == 0.0:
            return W[k]
        return (1 - theta) * W[k] + theta * upper

    def evaluate(n, w, w_pred):
        out = system.f(w)
        tn = t[n]
        for term in delays:
            out = out + term.field(past(tn - term.delay(tn), n, w_pred))
        return out

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        F[:, 0] = evaluate(0, w0, w0)
        for n in range(1, N + 1):
            pred = np.empty(d)
            hist = np.empty(d)
            for i in range(d):
                p_tab, c_tab = tables[i]
                pred[i], hist[i] = memory_sums(
                    F[i], n, p_tab, c_tab, _corr_start(alphas[i], n, h)
                )
            w = w0 + pred
            for _ in range(config.corrector_iterations):
                Fp = evaluate(n, w, w)
                w = w0 + hist + np.array(gnorm) * Fp
            neg = (w < 0) & (w >= -CLAMP_TOL)
            if neg.any():
                w = np.where(neg, 0.0, w)
                n_clamped += 1
            if np.any(w < -CLAMP_TOL):
                key = "negative state below clamp tolerance"
                messages.setdefault(key, float(t[n]))
            W[n] = w
            if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > DIVERGENCE_BOUND:
                traj.n_valid = n
                traj.diverged = True
                traj.warnings = _collect(messages, caught, n_clamped)
                raise DivergenceError(
                    f"state norm exceeded {DIVERGENCE_BOUND:g} at t={t[n]:.6g}",
                    traj.truncated(),
                )
            F[:, n] = evaluate(n, w, w)
    traj.n_valid = N + 1
    traj.warnings = _collect(messages, caught, n_clamped)
    return traj


def _collect(messages, caught, n_clamped):
    out = [f"{k} (first at t={v:.6g})" for k, v in messages.items()]
    if n_clamped:
        out.append(f"clamped tiny negative states to 0 at {n_clamped} steps")
    seen = set()
    for w in caught:
        msg = f"{w.category.__name__}: {w.message}"
        key = w.category.__name__
        if key not in seen:
            seen.add(key)
            out.append(msg)
    return out
