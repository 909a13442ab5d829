"""Checks of simulated trajectories against the stability guarantees."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .certificate import Certificate, ScopeError
from .solver import Trajectory
from .system import InitialCondition

__all__ = [
    "VerificationReport",
    "phi_weighted_norm",
    "verify_positivity",
    "verify_norm_bound",
    "verify_envelope",
    "detect_nonconvergence",
]


@dataclass
class VerificationReport:
    check: str
    passed: bool
    worst_violation: float
    at_t: float | None
    component: int | None = None
    first_violation_t: float | None = None
    margins: np.ndarray | None = field(default=None, repr=False)
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "check": self.check,
            "pass": bool(self.passed),
            "worst_violation": float(self.worst_violation),
            "at_t": None if self.at_t is None else float(self.at_t),
        }
        if self.component is not None:
            out["component"] = int(self.component)
        if self.first_violation_t is not None:
            out["first_violation_t"] = float(self.first_violation_t)
        if self.detail:
            out["detail"] = self.detail
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _valid(traj: Trajectory):
    n = traj.n_valid
    return traj.t[:n], traj.states[:n]


def _report(check, excess, t, tol):
    """Build a report from a (times x components) array of excesses over the
    allowed bound; positive entries beyond ``tol`` are violations."""
    worst_idx = np.unravel_index(np.argmax(excess), excess.shape)
    worst = float(excess[worst_idx])
    bad = excess > tol
    if bad.any():
        row, comp = np.argwhere(bad)[0]
        return VerificationReport(check, False, worst, float(t[worst_idx[0]]),
                                  int(comp), float(t[row]), margins=-excess.max(axis=1))
    return VerificationReport(check, True, worst, float(t[worst_idx[0]]),
                              margins=-excess.max(axis=1))


def phi_weighted_norm(phi: InitialCondition, v, r: float, h: float) -> float:
    """``max_s ||phi(s)||_v`` over the sampling grid of ``[-r, 0]``."""
    return phi.norm(v, r, h)


def verify_positivity(traj: Trajectory, tol: float = 1e-6) -> VerificationReport:
    t, W = _valid(traj)
    return _report("positivity", -W, t, tol)


def verify_norm_bound(traj: Trajectory, v, phi: InitialCondition | None = None,
                      tol: float = 1e-6) -> VerificationReport:
    t, W = _valid(traj)
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValueError("weights must be strictly positive")
    phi = traj.phi if phi is None else phi
    bound = phi_weighted_norm(phi, v, traj.r, traj.h)
    norms = np.max(np.abs(W) / v, axis=1, keepdims=True)
    rep = _report("norm_bound", norms - bound, t, tol)
    rep.detail = {"phi_norm": bound}
    if not rep.passed:
        rep.component = int(np.argmax(np.abs(W[np.searchsorted(t, rep.first_violation_t)]) / v))
    return rep


def verify_envelope(traj: Trajectory, cert: Certificate, tol: float = 1e-4) -> VerificationReport:
    t, W = _valid(traj)
    if W.shape[1] != cert.dim:
        raise ValueError(f"trajectory has {W.shape[1]} components, certificate {cert.dim}")
    phi_norm = phi_weighted_norm(traj.phi, cert.v, traj.r, traj.h)
    if cert.scope == "local" and phi_norm >= 1:
        raise ScopeError(f"local certificate does not cover ||phi||_v = {phi_norm:.6g} >= 1")
    rep = _report("envelope", W - cert.envelope(t), t, tol)
    rep.detail = {"phi_norm": phi_norm}
    return rep


def detect_nonconvergence(traj: Trajectory, window: float = 0.25, decay: float = 1e-2,
                          slope_tol: float = -0.1) -> VerificationReport:
    """Flag trajectories that are not converging to the origin.

    Over the trailing ``window`` fraction of the computed horizon a trajectory
    counts as convergent if its max-norm has dropped below ``decay`` times
    the initial max-norm, or if it is still decaying: the least-squares slope
    of ``log ||w(t)||`` against ``log t`` is at most ``slope_tol``. The second
    route is needed because Mittag-Leffler decay is algebraic and can take
    far longer than any practical horizon to lose two orders of magnitude.
    ``passed`` is True for convergent trajectories.
    """
    if not 0 < window < 1:
        raise ValueError("window must lie in (0, 1)")
    t, W = _valid(traj)
    norms = np.max(np.abs(W), axis=1)
    start = norms[0]
    T = t[-1]
    tail = t >= (1 - window) * T
    if tail.sum() < 2 or T <= 0:
        raise ValueError("trajectory too short for the trailing window")
    tail_min = float(norms[tail].min())
    diverged = bool(traj.diverged or traj.n_valid < len(traj.t))
    detail = {"initial_norm": float(start), "tail_min": tail_min, "diverged": diverged}
    if diverged or not np.all(np.isfinite(norms)):
        detail["slope"] = None
        return VerificationReport("nonconvergence", False, float(norms[tail].max()), float(T),
                                  detail=detail)
    decayed = tail_min <= decay * start
    tt, nn = t[tail & (t > 0)], norms[tail & (t > 0)]
    if np.any(nn <= 0):
        slope = -np.inf
    else:
        slope = float(np.polyfit(np.log(tt), np.log(nn), 1)[0])
    detail["slope"] = slope if np.isfinite(slope) else None
    convergent = bool(decayed or slope <= slope_tol)
    worst = tail_min - decay * start
    return VerificationReport("nonconvergence", convergent, float(worst),
                              float(tt[np.argmin(nn)]) if nn.size else float(T), detail=detail)
