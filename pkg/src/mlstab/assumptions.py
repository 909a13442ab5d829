"""Sampling-based checks of the structural hypotheses.

* cooperativity of ``f`` (Metzler Jacobian on the nonnegative orthant),
* homogeneity degrees of ``f`` and of every delayed field,
* order preservation of every delayed field on the nonnegative orthant,
* existence of a certificate vector ``v > 0`` with ``f(v) + sum_j g_j(v) < 0``.

None of this is a proof: a "pass" means no counterexample among the drawn
samples. Every check takes a seed and is reproducible.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .system import SystemSpec, VectorField, jacobian_fd

__all__ = [
    "CheckReport",
    "CertificateVector",
    "CertificateSearchError",
    "InconclusiveError",
    "check_cooperative",
    "estimate_degree",
    "check_degree",
    "check_order_preserving",
    "validate_certificate_vector",
    "find_certificate_vector",
    "check_assumptions",
]

FEASIBILITY_MARGIN = 1e-10


@dataclass
class CheckReport:
    assumption: str
    verdict: str  # "pass" | "fail" | "inconclusive"
    witnesses: list = field(default_factory=list)
    sample_count: int = 0
    rng_seed: int | None = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("pass", "fail", "inconclusive"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "fail" and not self.witnesses:
            raise ValueError("a failing report needs at least one counterexample")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CertificateVector:
    v: tuple
    slack: tuple

    def __post_init__(self):
        if any(x <= 0 for x in self.v):
            raise ValueError("certificate vector must be strictly positive")
        if any(s >= 0 for s in self.slack):
            raise ValueError("certificate slack must be strictly negative")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.v, dtype=float)


class InconclusiveError(RuntimeError):
    pass


class CertificateSearchError(RuntimeError):
    def __init__(self, message, best_v, best_slack):
        super().__init__(message)
        self.best_v = best_v
        self.best_slack = best_slack


def _orthant_points(rng, n, d, rmin=1e-3, rmax=1e3):
    direction = np.abs(rng.standard_normal((n, d)))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = np.exp(rng.uniform(math.log(rmin), math.log(rmax), n))
    return direction * radius[:, None]


def _tolist(x):
    return [float(v) for v in np.ravel(x)]


def check_cooperative(f: VectorField, n_samples: int = 500, h: float = 1e-5,
                      tol: float = 1e-8, rng_seed: int = 0) -> CheckReport:
    """Metzler test of the finite-difference Jacobian at sampled points.

    Sample radii are log-uniform in [1e-3, 1e3]. The step and the tolerance
    are scaled with the point so that large-radius samples are not swamped by
    cancellation: step ``h * max(1, |x|)``, tolerance ``tol * max(1, max|J|)``.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(rng_seed)
    pts = _orthant_points(rng, n_samples, f.dim)
    witnesses = []
    undefined = 0
    worst = 0.0
    for idx, x in enumerate(pts):
        step = h * max(1.0, float(np.linalg.norm(x)))
        with np.errstate(all="ignore"):
            J = jacobian_fd(f, x, step, lower=0.0)
        if not np.all(np.isfinite(J)):
            undefined += 1
            continue
        off = J[~np.eye(f.dim, dtype=bool)]
        scale = max(1.0, float(np.max(np.abs(J))))
        lowest = float(off.min()) if off.size else 0.0
        worst = min(worst, lowest / scale)
        if lowest < -tol * scale:
            i, j = np.argwhere((J < -tol * scale) & ~np.eye(f.dim, dtype=bool))[0]
            witnesses.append({"index": idx, "x": _tolist(x), "entry": [int(i), int(j)],
                              "value": float(J[i, j])})
    if witnesses:
        verdict = "fail"
    elif undefined == n_samples:
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return CheckReport("H1:cooperative", verdict, witnesses, n_samples, rng_seed,
                       {"undefined_jacobians": undefined, "worst_scaled_offdiag": worst})


def estimate_degree(field: VectorField, n_samples: int = 50, rng_seed: int = 0) -> float:
    """Homogeneity degree as the pooled least-squares slope of
    ``log ||field(lam x)||`` against ``log lam``, lam log-uniform in [0.1, 10]."""
    rng = np.random.default_rng(rng_seed)
    pts = np.abs(rng.uniform(0.1, 2.0, (n_samples, field.dim)))
    lams = np.exp(rng.uniform(math.log(0.1), math.log(10.0), (n_samples, 8)))
    sxx = sxy = 0.0
    used = 0
    for x, lam_row in zip(pts, lams):
        norms = np.array([np.linalg.norm(field(lam * x)) for lam in lam_row])
        if np.any(norms == 0) or not np.all(np.isfinite(norms)):
            continue
        lx = np.log(lam_row) - np.log(lam_row).mean()
        ly = np.log(norms) - np.log(norms).mean()
        sxx += float(lx @ lx)
        sxy += float(lx @ ly)
        used += 1
    if used == 0:
        raise InconclusiveError(f"{field.name} vanishes on every sample")
    return sxy / sxx


def check_degree(field: VectorField, declared: float | None = None, n_samples: int = 50,
                 tol: float = 1e-6, rng_seed: int = 0, label: str = "degree") -> CheckReport:
    declared = field.degree if declared is None else declared
    try:
        est = estimate_degree(field, n_samples, rng_seed)
    except InconclusiveError as exc:
        return CheckReport(label, "inconclusive", [], n_samples, rng_seed, {"reason": str(exc)})
    detail = {"declared": declared, "estimated": est}
    if abs(est - declared) <= tol:
        return CheckReport(label, "pass", [], n_samples, rng_seed, detail)
    return CheckReport(label, "fail", [{"estimated": est, "declared": declared}],
                       n_samples, rng_seed, detail)


def check_order_preserving(g: VectorField, n_pairs: int = 500, tol: float = 1e-9,
                           rng_seed: int = 0) -> CheckReport:
    """Sample ``u >= w >= 0`` and require ``g(u) >= g(w) - tol`` componentwise."""
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(rng_seed)
    w = rng.uniform(0.0, 5.0, (n_pairs, g.dim))
    # perturbations mix sizes and exact zeros so axis-aligned pairs are covered
    du = rng.exponential(1.0, (n_pairs, g.dim)) * (rng.random((n_pairs, g.dim)) < 0.8)
    u = w + du
    witnesses = []
    for idx in range(n_pairs):
        gu, gw = g(u[idx]), g(w[idx])
        bad = gu < gw - tol
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            witnesses.append({"index": idx, "u": _tolist(u[idx]), "w": _tolist(w[idx]),
                              "component": i, "g_u": float(gu[i]), "g_w": float(gw[i])})
    return CheckReport("H2:order-preserving", "fail" if witnesses else "pass",
                       witnesses, n_pairs, rng_seed)


def validate_certificate_vector(system: SystemSpec, v) -> CertificateVector:
    """Check ``v > 0`` and ``f(v) + sum_j g_j(v) <= -1e-10`` componentwise."""
    v = np.asarray(v, dtype=float)
    if v.shape != (system.dim,):
        raise ValueError(f"certificate vector must have length {system.dim}")
    if np.any(v <= 0):
        raise ValueError("certificate vector must be strictly positive")
    slack = system.total_field(v)
    if np.any(slack > -FEASIBILITY_MARGIN):
        raise ValueError(f"f(v) + sum g(v) = {slack.tolist()} is not strictly negative")
    return CertificateVector(tuple(_tolist(v)), tuple(_tolist(slack)))


def _scaled_objective(system, u, s):
    # worst componentwise slack relative to the scale of v = s * u
    v = s * u
    return float(np.max(system.total_field(v) / (v * s ** (system.p - 1))))


def find_certificate_vector(system: SystemSpec, search_budget: int = 200,
                            rng_seed: int = 0) -> CertificateVector:
    """Random-restart pattern search for a certificate vector.

    Directions ``u`` live on the positive part of the unit sphere of the
    max-norm. Each restart runs a coordinate pattern search (log-space steps,
    halved on failure) on the worst relative slack at scale ``s``; scales
    1, 1/2, 1/4, ... are tried in turn because with ``q_j > p`` only small
    vectors can be feasible. The first strictly feasible ``v`` is returned;
    when ``q_j = p`` for all ``j`` it is normalised to ``max(v) = 1``.
    """
    d = system.dim
    rng = np.random.default_rng(rng_seed)
    scales = [1.0] if system.is_global else [2.0**-k for k in range(0, 12)]
    per_scale = max(1, search_budget // len(scales))
    best = (np.inf, None, None)
    for s in scales:
        for _ in range(per_scale):
            u = rng.uniform(0.05, 1.0, d)
            u[rng.integers(d)] = 1.0
            u /= u.max()
            val = _scaled_objective(system, u, s)
            step = 0.5
            for _ in range(60):
                if val < 0:
                    v = s * u
                    slack = system.total_field(v)
                    if np.all(slack <= -FEASIBILITY_MARGIN):
                        if system.is_global:
                            v = v / v.max()
                            slack = system.total_field(v)
                        return CertificateVector(tuple(_tolist(v)), tuple(_tolist(slack)))
                improved = False
                for j in range(d):
                    for sign in (1.0, -1.0):
                        cand = u.copy()
                        cand[j] *= math.exp(sign * step)
                        cand /= cand.max()
                        cval = _scaled_objective(system, cand, s)
                        if cval < val:
                            u, val, improved = cand, cval, True
                            break
                    if improved:
                        break
                if not improved:
                    step /= 2
                    if step < 1e-6:
                        break
            if val < best[0]:
                best = (val, s * u, system.total_field(s * u))
    raise CertificateSearchError(
        f"no certificate vector found within budget {search_budget}",
        None if best[1] is None else _tolist(best[1]),
        None if best[2] is None else _tolist(best[2]),
    )


def check_assumptions(system: SystemSpec, n_samples: int = 500, rng_seed: int = 0) -> list:
    """Reports for every structural hypothesis behind the stability certificate."""
    reports = [
        check_cooperative(system.f, n_samples, rng_seed=rng_seed),
        check_degree(system.f, label="H1:degree-f", rng_seed=rng_seed),
    ]
    for j, term in enumerate(system.delay_terms):
        rep = check_order_preserving(term.field, n_samples, rng_seed=rng_seed + j + 1)
        rep.assumption = f"H2:order-preserving-g{j + 1}"
        reports.append(rep)
        reports.append(check_degree(term.field, label=f"H2:degree-g{j + 1}",
                                    rng_seed=rng_seed + j + 1))
    ok = all(q >= system.p >= 1 for q in system.q)
    reports.append(CheckReport(
        "H2:degree-order", "pass" if ok else "fail",
        [] if ok else [{"p": system.p, "q": list(system.q)}], 0, None,
        {"p": system.p, "q": list(system.q)},
    ))
    return reports
