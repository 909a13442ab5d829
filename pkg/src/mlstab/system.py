"""Multi-order fractional delay systems.

A system is

    D^{alpha_i} w_i(t) = f_i(w(t)) + sum_j g^(j)_i(w(t - tau_j(t))),   t > 0
    w(s) = phi(s),                                                     s in [-r, 0]

with Caputo derivatives taken componentwise. Vector fields are plain Python
callables on 1-D arrays wrapped in :class:`VectorField`, which also carries
the declared homogeneity degree.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NegativeRadicandWarning",
    "VectorField",
    "DelayTerm",
    "SystemSpec",
    "InitialCondition",
    "BuiltinExample",
    "weighted_norm",
    "rhs",
    "jacobian_fd",
    "builtin_example",
    "make_field",
    "make_delay",
    "register_field",
    "register_delay",
    "FIELDS",
    "DELAYS",
]


class NegativeRadicandWarning(RuntimeWarning):
    """A square root saw a negative radicand and clamped it to zero."""


def safe_sqrt(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        warnings.warn(
            f"negative radicand {float(np.min(x)):.3e} clamped to 0",
            NegativeRadicandWarning,
            stacklevel=2,
        )
        x = np.maximum(x, 0.0)
    return np.sqrt(x)


@dataclass(frozen=True)
class VectorField:
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    degree: float = 1.0
    name: str = "field"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("field dimension must be positive")
        if self.degree < 1:
            raise ValueError(f"homogeneity degree must be >= 1, got {self.degree}")

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class DelayTerm:
    field: VectorField
    tau: Callable[[float], float]
    r: float
    name: str = "delay"

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("delay bound r_j must be positive")

    def delay(self, t: float) -> float:
        d = float(self.tau(t))
        if d < -1e-14 or d > self.r + 1e-14:
            raise ValueError(f"tau({t}) = {d} outside [0, {self.r}]")
        return min(max(d, 0.0), self.r)


@dataclass(frozen=True)
class SystemSpec:
    orders: tuple
    f: VectorField
    delay_terms: tuple = ()
    name: str = "system"

    def __post_init__(self):
        orders = tuple(float(a) for a in np.atleast_1d(self.orders))
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "delay_terms", tuple(self.delay_terms))
        for a in orders:
            if not (0 < a <= 1):
                raise ValueError(f"every order must lie in (0, 1], got {a}")
        if self.f.dim != len(orders):
            raise ValueError(
                f"f has dimension {self.f.dim} but {len(orders)} orders were given"
            )
        for term in self.delay_terms:
            if term.field.dim != self.dim:
                raise ValueError("all delay fields must share the system dimension")
            if term.field.degree < self.f.degree:
                raise ValueError(
                    f"delay degree {term.field.degree} below f degree {self.f.degree}"
                )

    @property
    def dim(self) -> int:
        return len(self.orders)

    @property
    def r(self) -> float:
        return max((t.r for t in self.delay_terms), default=0.0)

    @property
    def p(self) -> float:
        return self.f.degree

    @property
    def q(self) -> tuple:
        return tuple(t.field.degree for t in self.delay_terms)

    @property
    def is_global(self) -> bool:
        """All delayed degrees equal the undelayed one."""
        return all(q == self.p for q in self.q)

    def total_field(self, v) -> np.ndarray:
        """``f(v) + sum_j g^(j)(v)``, the left side of the certificate condition."""
        v = np.asarray(v, dtype=float)
        out = self.f(v)
        for term in self.delay_terms:
            out = out + term.field(v)
        return out


class InitialCondition:
    """History ``phi`` on ``[-r, 0]``.

    Either a closed form (constant or callable) or samples on a uniform grid
    over ``[-r, 0]`` that are linearly interpolated.
    """

    def __init__(self, func=None, *, samples=None, r=None, kind="function", params=None):
        self._func = func
        self.kind = kind
        self.params = params or {}
        if samples is not None:
            samples = np.asarray(samples, dtype=float)
            if samples.ndim != 2 or samples.shape[0] < 2:
                raise ValueError("samples must be a (n >= 2, d) array")
            if r is None or r <= 0:
                raise ValueError("sampled history needs its interval length r > 0")
            if np.any(samples < 0):
                raise ValueError("initial history must be nonnegative")
            self.samples = samples
            self.sample_times = np.linspace(-r, 0.0, samples.shape[0])
            self.r = float(r)
            self.dim = samples.shape[1]
            self.kind = "samples"
        else:
            if func is None:
                raise ValueError("need a function or samples")
            self.samples = None
            self.sample_times = None
            self.r = None
            self.dim = int(np.size(func(0.0)))

    @classmethod
    def constant(cls, value):
        value = np.array(value, dtype=float)
        if np.any(value < 0):
            raise ValueError("initial history must be nonnegative")
        value.setflags(write=False)
        return cls(lambda s: value, kind="constant", params={"value": value.tolist()})

    @classmethod
    def from_samples(cls, values, r):
        return cls(samples=values, r=r)

    def __call__(self, s) -> np.ndarray:
        if self.samples is None:
            return np.asarray(self._func(s), dtype=float)
        s = float(s)
        if s < -self.r - 1e-12 or s > 1e-12:
            raise ValueError(f"history lookup at s={s} outside [-{self.r}, 0]")
        return np.array(
            [np.interp(s, self.sample_times, self.samples[:, i]) for i in range(self.dim)]
        )

    def grid(self, r: float, h: float) -> np.ndarray:
        """Sampling times on ``[-r, 0]``: the stored grid, or spacing ``h``."""
        if self.samples is not None:
            return self.sample_times.copy()
        if r <= 0:
            return np.array([0.0])
        m = max(1, int(round(r / h)))
        return np.linspace(-r, 0.0, m + 1)

    def values(self, times) -> np.ndarray:
        return np.array([self(s) for s in times])

    def norm(self, v, r: float, h: float = 1e-3) -> float:
        """``max_s ||phi(s)||_v`` over the sampling grid."""
        vals = self.values(self.grid(r, h))
        return float(max(weighted_norm(w, v) for w in vals))


def weighted_norm(w, v) -> float:
    """``max_i |w_i| / v_i``."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if w.shape != v.shape:
        raise ValueError(f"dimension mismatch: {w.shape} vs {v.shape}")
    if np.any(v <= 0):
        raise ValueError("weight vector must be strictly positive")
    return float(np.max(np.abs(w) / v))


def rhs(system: SystemSpec, t: float, w_now, history) -> np.ndarray:
    """Right-hand side at time ``t``; ``history(s)`` looks up ``w(s)``, s <= t."""
    out = system.f(w_now)
    for term in system.delay_terms:
        out = out + term.field(history(t - term.delay(t)))
    return out


def jacobian_fd(field, x, h: float = 1e-5, lower=None) -> np.ndarray:
    """Central-difference Jacobian ``(d field_i / d x_j)``.

    If ``lower`` is given, coordinates closer than ``h`` to it use a one-sided
    second-order forward difference so the field is never evaluated below
    ``lower``.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    J = np.empty((np.size(field(x)), d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        if lower is not None and x[j] - h < lower:
            J[:, j] = (-3 * field(x) + 4 * field(x + e) - field(x + 2 * e)) / (2 * h)
        else:
            J[:, j] = (field(x + e) - field(x - e)) / (2 * h)
    return J


# Registries -----------------------------------------------------------------

FIELDS: dict = {}
DELAYS: dict = {}


def register_field(name: str, factory: Callable[..., VectorField] | None = None):
    """Register ``factory(**params) -> VectorField``; usable as a decorator."""
    if factory is None:
        return lambda fn: register_field(name, fn)
    FIELDS[name] = factory
    return factory


def register_delay(name: str, factory: Callable[..., tuple] | None = None):
    """Register ``factory(**params) -> (tau, r)``; usable as a decorator."""
    if factory is None:
        return lambda fn: register_delay(name, fn)
    DELAYS[name] = factory
    return factory


def make_field(name: str, **params) -> VectorField:
    try:
        factory = FIELDS[name]
    except KeyError:
        raise KeyError(f"unknown field {name!r}; known: {sorted(FIELDS)}") from None
    return factory(**params)


def make_delay(kind: str, **params):
    try:
        factory = DELAYS[kind]
    except KeyError:
        raise KeyError(f"unknown delay kind {kind!r}; known: {sorted(DELAYS)}") from None
    return factory(**params)


def _linear(matrix):
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("linear field needs a square matrix")
    A.setflags(write=False)
    return VectorField(A.shape[0], lambda w: A @ w, 1.0, "linear")


def _zero(dim, degree=1.0):
    return VectorField(int(dim), lambda w: np.zeros(int(dim)), float(degree), "zero")


def _identity(dim):
    return VectorField(int(dim), lambda w: np.array(w, dtype=float), 1.0, "identity")


def _ex1_f(w):
    w1, w2 = w
    return np.array([-4 * w1 + 3 * w2, w1 - 3 * w2])


def _ex1_g(w):
    w1, w2 = w
    return np.array([w1**2 + 3 * safe_sqrt(w1**3 * w2), w1 * w2 + 2 * w2**2])


def _ex2_f(w):
    w1, w2 = w
    return np.array([-8 * w1**2 + w2**2, 2 * w1**2 - 9 * w2**2])


def _ex2_g(w):
    w1, w2 = w
    return np.array([3 * w1 * w2 + w2**2, (w1 + 2 * w2) * safe_sqrt(w1**2 + 7 * w2**2)])


register_field("linear", _linear)
register_field("zero", _zero)
register_field("identity", _identity)
register_field("example1.f", lambda: VectorField(2, _ex1_f, 1.0, "example1.f"))
register_field("example1.g", lambda: VectorField(2, _ex1_g, 2.0, "example1.g"))
register_field("example2.f", lambda: VectorField(2, _ex2_f, 2.0, "example2.f"))
register_field("example2.g", lambda: VectorField(2, _ex2_g, 2.0, "example2.g"))


@register_delay("constant")
def _constant_delay(tau):
    tau = float(tau)
    return (lambda t: tau), tau


@register_delay("sine")
def _sine_delay(a, b, omega=1.0):
    """``tau(t) = a + b sin(omega t)``."""
    a, b, omega = float(a), float(b), float(omega)
    if a - abs(b) < 0:
        raise ValueError("sine delay must stay nonnegative")
    return (lambda t: a + b * math.sin(omega * t)), a + abs(b)


@register_delay("rational")
def _rational_delay(a, b, c):
    """``tau(t) = a + b / (c + t**2)``, b >= 0, c > 0; bounded by a + b/c."""
    a, b, c = float(a), float(b), float(c)
    if c <= 0 or b < 0 or a < 0:
        raise ValueError("rational delay needs a, b >= 0 and c > 0")
    return (lambda t: a + b / (c + t * t)), a + b / c


# Built-in examples ------------------------------------------------------------


@dataclass(frozen=True)
class BuiltinExample:
    name: str
    system: SystemSpec
    v: tuple | None
    phis: tuple = field(default_factory=tuple)


def builtin_example(name: str) -> BuiltinExample:
    """The two worked systems: ``example1`` (p=1, q=2) and ``example2`` (p=q=2).

    ``example2.v`` is ``None``: with ``g_2 = (w_1 + 2 w_2) sqrt(w_1^2 + 7 w_2^2)``
    the point (1, 1) is not a certificate vector, so one has to be searched.
    """
    if name == "example1":
        tau, r = make_delay("sine", a=2 / 3, b=1 / 3, omega=1.0)
        system = SystemSpec(
            (0.71, 0.61),
            make_field("example1.f"),
            (DelayTerm(make_field("example1.g"), tau, r, "sine"),),
            name="example1",
        )
        phis = (InitialCondition.constant([0.2, 0.15]), InitialCondition.constant([1.2, 0.4]))
        return BuiltinExample(name, system, (0.3, 0.2), phis)
    if name == "example2":
        tau, r = make_delay("rational", a=0.5, b=1.0, c=2.0)
        system = SystemSpec(
            (0.95, 0.7),
            make_field("example2.f"),
            (DelayTerm(make_field("example2.g"), tau, r, "rational"),),
            name="example2",
        )
        phis = (InitialCondition.constant([0.2, 0.4]), InitialCondition.constant([2.3, 0.2]))
        return BuiltinExample(name, system, None, phis)
    raise KeyError(f"unknown example {name!r}; expected 'example1' or 'example2'")
