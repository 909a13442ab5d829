"""CSV trajectories, JSON run configurations and atomic file output."""
from __future__ import annotations

import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .solver import SolverConfig, Trajectory
from .system import (
    DelayTerm,
    InitialCondition,
    SystemSpec,
    builtin_example,
    make_delay,
    make_field,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "atomic_write",
    "trajectory_to_csv",
    "write_trajectory",
    "read_trajectory",
    "parse_config",
    "load_config",
    "dump_json",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed run configuration or data file."""


def atomic_write(path, text: str):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


# CSV --------------------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    """Header ``t,w_1,...,w_d``; history rows (s < 0) first, then the solution."""
    hist_t = traj.history_grid()
    hist = traj.phi.values(hist_t) if hist_t.size else np.empty((0, traj.dim))
    n = traj.n_valid
    t = np.concatenate([hist_t, traj.t[:n]])
    W = np.vstack([hist, traj.states[:n]])
    buf = io.StringIO()
    buf.write(",".join(["t"] + [f"w_{i + 1}" for i in range(traj.dim)]) + "\n")
    np.savetxt(buf, np.column_stack([t, W]), fmt="%.17g", delimiter=",")
    return buf.getvalue()


def write_trajectory(traj: Trajectory, path):
    atomic_write(path, trajectory_to_csv(traj))


def read_trajectory(path) -> Trajectory:
    """Rebuild a trajectory from CSV; history rows become a sampled ``phi``."""
    try:
        with open(path, newline="") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"{path}: cannot parse trajectory CSV ({exc})") from None
    d = len(header) - 1
    if d < 1 or header[0] != "t" or header[1:] != [f"w_{i + 1}" for i in range(d)]:
        raise ConfigError(f"{path}: header must be t,w_1,...,w_d")
    if data.shape[1] != d + 1 or data.shape[0] < 2:
        raise ConfigError(f"{path}: expected at least two rows of {d + 1} columns")
    if not np.all(np.isfinite(data)):
        raise ConfigError(f"{path}: non-finite values")
    t, W = data[:, 0], data[:, 1:]
    if np.any(np.diff(t) <= 0):
        raise ConfigError(f"{path}: times must be strictly increasing")
    k0 = int(np.searchsorted(t, 0.0))
    if k0 >= len(t) or t[k0] != 0.0:
        raise ConfigError(f"{path}: no row at t = 0")
    post_t, post_W = t[k0:], W[k0:]
    if len(post_t) < 2:
        raise ConfigError(f"{path}: need at least one step after t = 0")
    h = float(post_t[1] - post_t[0])
    try:
        if k0 == 0:
            phi = InitialCondition.constant(post_W[0])
            r = 0.0
        else:
            r = float(-t[0])
            phi = InitialCondition.from_samples(W[: k0 + 1], r)
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid history ({exc})") from None
    return Trajectory(post_t.copy(), post_W.copy(), phi, r, h)


# Run configuration --------------------------------------------------------------


@dataclass
class RunConfig:
    system: SystemSpec
    phi: InitialCondition | None
    solver: SolverConfig
    seed: int = 0
    v: tuple | None = None
    example: str | None = None
    phi_given: bool = True


def _need(doc, key, where="config"):
    if key not in doc:
        raise ConfigError(f"{where}: missing key {key!r}")
    return doc[key]


def _field(doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: field must be an object with 'name' and 'params'")
    name = _need(doc, "name", where)
    return make_field(name, **doc.get("params", {}))


def _phi(doc):
    kind = _need(doc, "kind", "phi")
    if kind == "constant":
        return InitialCondition.constant(_need(doc, "value", "phi"))
    if kind == "samples":
        return InitialCondition.from_samples(_need(doc, "values", "phi"), float(_need(doc, "r", "phi")))
    raise ConfigError(f"phi: unknown kind {kind!r} (expected 'constant' or 'samples')")


def parse_config(doc: dict) -> RunConfig:
    """Build a run configuration from a decoded JSON document (schema 1).

    Either ``{"example": "example1", ...}`` or an explicit system::

        {"schema": 1,
         "orders": [0.5, 0.8],
         "f": {"name": "linear", "params": {"matrix": [[-2, 1], [1, -3]]}},
         "delays": [{"field": {"name": "zero", "params": {"dim": 2}},
                     "kind": "constant", "params": {"tau": 0.5}}],
         "phi": {"kind": "constant", "value": [0.1, 0.2]},
         "T": 10, "step": 0.001, "seed": 0}

    Optional keys: ``corrector_iterations``, ``v`` (certificate vector) and,
    for built-in examples, ``phi_index`` selecting a reference history.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {schema!r}")
    try:
        example = doc.get("example")
        v = doc.get("v")
        if example is not None:
            if "orders" in doc or "f" in doc:
                raise ConfigError("give either 'example' or an explicit system, not both")
            ex = builtin_example(example)
            system = ex.system
            phi = _phi(doc["phi"]) if "phi" in doc else ex.phis[int(doc.get("phi_index", 0))]
            v = ex.v if v is None else v
        else:
            orders = tuple(float(a) for a in _need(doc, "orders"))
            f = _field(_need(doc, "f"), "f")
            terms = []
            for k, dl in enumerate(doc.get("delays", [])):
                where = f"delays[{k}]"
                g = _field(_need(dl, "field", where), where + ".field")
                tau, r = make_delay(_need(dl, "kind", where), **dl.get("params", {}))
                terms.append(DelayTerm(g, tau, r, dl["kind"]))
            system = SystemSpec(orders, f, tuple(terms), name=doc.get("name", "custom"))
            phi = _phi(doc["phi"]) if "phi" in doc else None
        solver = SolverConfig(
            h=float(doc.get("step", 1e-3)),
            T=float(doc.get("T", 20.0)),
            corrector_iterations=int(doc.get("corrector_iterations", 1)),
        )
        seed = int(doc.get("seed", 0))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(str(exc).strip('"')) from None
    if phi is not None and phi.dim != system.dim:
        raise ConfigError(f"phi has dimension {phi.dim}, system has {system.dim}")
    if v is not None:
        v = tuple(float(x) for x in v)
        if len(v) != system.dim:
            raise ConfigError(f"v has length {len(v)}, system has dimension {system.dim}")
    env = os.environ.get("MLSTAB_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"MLSTAB_SEED must be an integer, got {env!r}") from None
    return RunConfig(system, phi, solver, seed, v, example, "phi" in doc)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc)
