"""Explicit Mittag-Leffler decay certificates.

Given a certificate vector ``v`` the rate constant ``c`` is the largest value
in (0, 1) for which, for every component ``i``,

    f_i(v)/v_i + sum_j g_i^(j)(v) / (E_beta(-c r^beta)^q_j v_i)
        + (||phi||_v / E_beta(-c))^(1-p) * c * sup_{t>=1} I_i(t) <= 0,

    I_i(t) = t^(beta-alpha_i) E_{beta,beta+1-alpha_i}(-c t^beta) / E_beta(-c t^beta)^p,

with ``beta = min_i alpha_i / p``. The solution then obeys
``w_i(t) <= nu v_i E_beta(-c t^beta)`` with ``nu = ||phi||_v / E_beta(-c)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .assumptions import CertificateVector, validate_certificate_vector
from .special import gamma, mittag_leffler
from .system import SystemSpec

__all__ = [
    "ScopeError",
    "InfeasibleError",
    "Certificate",
    "compute_beta",
    "sup_I",
    "envelope_ratio",
    "rate_inequality_lhs",
    "find_rate_constant",
    "build_certificate",
]

SUP_SAFETY = 1.01
C_MIN = 1e-12
C_MAX = 1.0 - 1e-12


class ScopeError(ValueError):
    """A local certificate was requested for data outside ``||phi||_v < 1``."""


class InfeasibleError(RuntimeError):
    """No rate constant in (0, 1) satisfies the inequality."""


def compute_beta(orders, p: float) -> float:
    if p < 1:
        raise ValueError(f"homogeneity degree p must be >= 1, got {p}")
    return min(orders) / p


def _check_sup_args(beta, alpha_i, c):
    if not 0 < beta <= alpha_i <= 1:
        raise ValueError(f"need 0 < beta <= alpha_i <= 1, got beta={beta}, alpha_i={alpha_i}")
    if not 0 < c < 1:
        raise ValueError(f"rate c must lie in (0, 1), got {c}")


def envelope_ratio(beta: float, alpha_i: float, c: float, t):
    """``E_{beta,beta+1-alpha_i}(-c t^beta) / E_beta(-c t^beta)``; tends to
    ``Gamma(1-beta)/Gamma(1-alpha_i)`` as t grows."""
    _check_sup_args(beta, alpha_i, c)
    x = -c * np.asarray(t, dtype=float) ** beta
    return mittag_leffler(x, beta, beta + 1 - alpha_i) / mittag_leffler(x, beta, 1.0)


def _tail(beta, alpha_i, c, power):
    if alpha_i == 1.0:
        return 0.0
    if power == 1:
        return gamma(1 - beta) / gamma(1 - alpha_i)
    # for power > 1 the ratio behaves like t^(power*beta - alpha_i) at infinity
    if abs(power * beta - alpha_i) > 1e-12:
        return 0.0
    return c ** (power - 1) * gamma(1 - beta) ** power / gamma(1 - alpha_i)


def sup_I(beta: float, alpha_i: float, c: float, n_grid: int = 400,
          t_max: float = 1e8, power: float = 1) -> float:
    """Supremum over t >= 1 of ``t^(beta-alpha_i) E_{beta,beta+1-alpha_i}(-c t^beta)
    / E_beta(-c t^beta)^power``: the larger of a log-grid maximum on
    [1, t_max] and the limiting value at infinity."""
    _check_sup_args(beta, alpha_i, c)
    if power < 1:
        raise ValueError("power must be >= 1")
    if power == 1 and beta == alpha_i:
        return 1.0
    t = np.logspace(0.0, math.log10(t_max), n_grid)
    x = -c * t**beta
    num = mittag_leffler(x, beta, beta + 1 - alpha_i)
    den = mittag_leffler(x, beta, 1.0)
    vals = t ** (beta - alpha_i) * num / den**power
    return max(float(np.max(vals)), _tail(beta, alpha_i, c, power))


def rate_inequality_lhs(system: SystemSpec, v, c: float, phi_norm: float,
                        n_grid: int = 400, safety: float = SUP_SAFETY) -> np.ndarray:
    """Componentwise left side of the rate inequality at ``c``."""
    v = np.asarray(v, dtype=float)
    p = system.p
    beta = compute_beta(system.orders, p)
    if p > 1 and phi_norm <= 0:
        raise ValueError("phi_norm must be positive when p > 1")
    out = system.f(v) / v
    for term in system.delay_terms:
        decay = mittag_leffler(-c * term.r**beta, beta)
        out = out + term.field(v) / (decay ** term.field.degree * v)
    nu = phi_norm / mittag_leffler(-c, beta)
    lead = nu ** (1 - p) if p != 1 else 1.0
    sups = np.array([sup_I(beta, a, c, n_grid, power=p) for a in system.orders])
    return out + lead * c * safety * sups


def find_rate_constant(system: SystemSpec, v, phi_norm: float, tol: float = 1e-6,
                       n_grid: int = 400) -> float:
    """Largest ``c`` in (0, 1), to within ``tol``, satisfying the inequality."""
    if not system.is_global and phi_norm >= 1:
        raise ScopeError(
            f"local certificate needs ||phi||_v < 1, got {phi_norm:.6g}"
        )

    def ok(c):
        return bool(np.all(rate_inequality_lhs(system, v, c, phi_norm, n_grid) <= 0))

    grid = np.geomspace(C_MIN, C_MAX, 49)
    feasible = [ok(c) for c in grid]
    if not any(feasible):
        raise InfeasibleError("no rate constant in (1e-12, 1-1e-12) satisfies the inequality")
    k = max(i for i, f in enumerate(feasible) if f)
    if k == len(grid) - 1:
        return float(grid[-1])
    lo, hi = float(grid[k]), float(grid[k + 1])
    while hi - lo > tol * max(lo, C_MIN):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Certificate:
    v: tuple
    beta: float
    c: float
    nu: float
    sup_I: tuple
    scope: str
    phi_norm: float
    p: float = 1.0

    def __post_init__(self):
        if self.scope not in ("local", "global"):
            raise ValueError(f"scope must be 'local' or 'global', got {self.scope!r}")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not 0 < self.c < 1:
            raise ValueError("c must lie in (0, 1)")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if any(x <= 0 for x in self.v):
            raise ValueError("v must be strictly positive")

    @property
    def dim(self) -> int:
        return len(self.v)

    def envelope(self, t):
        """``nu * v_i * E_beta(-c t^beta)``; rows are times when ``t`` is an array."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("envelope is defined for t >= 0")
        decay = mittag_leffler(-self.c * t**self.beta, self.beta)
        return self.nu * np.multiply.outer(decay, np.array(self.v))

    def to_dict(self) -> dict:
        return {
            "v": list(self.v),
            "beta": self.beta,
            "c": self.c,
            "nu": self.nu,
            "scope": self.scope,
            "sup_I": list(self.sup_I),
            "phi_norm": self.phi_norm,
            "p": self.p,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        missing = {"v", "beta", "c", "nu", "scope", "sup_I"} - set(d)
        if missing:
            raise ValueError(f"certificate is missing {sorted(missing)}")
        return cls(
            v=tuple(float(x) for x in d["v"]),
            beta=float(d["beta"]),
            c=float(d["c"]),
            nu=float(d["nu"]),
            sup_I=tuple(float(x) for x in d["sup_I"]),
            scope=str(d["scope"]),
            phi_norm=float(d.get("phi_norm", d["nu"] * mittag_leffler(-float(d["c"]), float(d["beta"])))),
            p=float(d.get("p", 1.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls.from_dict(json.loads(text))


def build_certificate(system: SystemSpec, v, phi_norm: float | None = None,
                      tol: float = 1e-6) -> Certificate:
    """Validate ``v`` and compute ``beta``, ``c``, ``nu`` and the sup values.

    ``phi_norm`` may be omitted for global systems, in which case the
    certificate is issued for ``||phi||_v = 1``.
    """
    cv = v if isinstance(v, CertificateVector) else validate_certificate_vector(system, v)
    scope = "global" if system.is_global else "local"
    if phi_norm is None:
        if scope == "local":
            raise ScopeError("a local certificate needs the norm of the initial data")
        phi_norm = 1.0
    c = find_rate_constant(system, cv.array, phi_norm, tol)
    beta = compute_beta(system.orders, system.p)
    sups = tuple(sup_I(beta, a, c, power=system.p) for a in system.orders)
    nu = phi_norm / mittag_leffler(-c, beta)
    return Certificate(cv.v, beta, c, float(nu), sups, scope, float(phi_norm), system.p)
