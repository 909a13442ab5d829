"""``mlstab`` command line: examples, simulation, certificates, verification.

Exit codes: 0 success, 1 I/O failure, 2 verification failure or solver
divergence, 3 failed assumptions or certificate scope refused, 4 no
certificate vector found, 64 usage error, 65 malformed input data.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import assumptions as asm
from .certificate import Certificate, InfeasibleError, ScopeError, build_certificate
from .fileio import (
    ConfigError,
    atomic_write,
    dump_json,
    load_config,
    read_trajectory,
    write_trajectory,
)
from .solver import DivergenceError, SolverConfig, solve
from .svg import plot_svg
from .system import builtin_example
from .verify import (
    detect_nonconvergence,
    verify_envelope,
    verify_norm_bound,
    verify_positivity,
)

EX_OK, EX_IO, EX_CHECK, EX_ASSUME, EX_NOVEC, EX_USAGE, EX_DATA = 0, 1, 2, 3, 4, 64, 65
EXAMPLES = ("example1", "example2")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _seed(flag=None):
    if flag is not None:
        return flag
    env = os.environ.get("MLSTAB_SEED")
    return int(env) if env is not None else 0


def _run(system, phi, cfg):
    try:
        return solve(system, phi, cfg), False
    except DivergenceError as exc:
        return exc.trajectory, True


def _plot(traj, cert, title):
    t = traj.t[: traj.n_valid]
    env = cert.envelope(t) if cert is not None else None
    return plot_svg(t, traj.states[: traj.n_valid], env, title)


def _checks_dict(reports):
    return [r.to_dict() for r in reports]


# example ----------------------------------------------------------------------


def run_example(name: str, out: Path, step: float = 1e-3, horizon: float = 20.0,
                seed: int = 0) -> bool:
    """Run every reference history of a built-in example and write artifacts.

    Returns True when every expected verdict holds.
    """
    ex = builtin_example(name)
    system = ex.system
    checks = asm.check_assumptions(system, rng_seed=seed)
    if ex.v is not None:
        v = asm.validate_certificate_vector(system, ex.v)
    else:
        v = asm.find_certificate_vector(system, rng_seed=seed)
    cfg = SolverConfig(h=step, T=horizon)
    all_ok = all(r.verdict != "fail" for r in checks)
    for k, phi in enumerate(ex.phis, start=1):
        folder = out / name / f"phi{k}"
        phi_norm = phi.norm(v.v, system.r, step)
        try:
            cert = build_certificate(system, v, phi_norm)
        except ScopeError:
            cert = None
        traj, diverged = _run(system, phi, cfg)
        reports = [verify_positivity(traj)]
        expected = {"positivity": True}
        if cert is not None:
            reports += [verify_norm_bound(traj, v.v), verify_envelope(traj, cert)]
            expected.update(norm_bound=True, envelope=True)
        conv = detect_nonconvergence(traj)
        reports.append(conv)
        expected["nonconvergence"] = cert is not None
        verdicts = {r.check: r.passed for r in reports}
        ok = all(verdicts[key] == want for key, want in expected.items())
        all_ok &= ok
        report = {
            "example": name,
            "phi": phi.params,
            "v": list(v.v),
            "phi_norm": phi_norm,
            "scope": "global" if system.is_global else "local",
            "in_scope": cert is not None,
            "diverged": diverged,
            "horizon": traj.T,
            "convergent": conv.passed,
            "checks": _checks_dict(reports),
            "expected": expected,
            "expected_verdicts_hold": ok,
            "assumptions": [r.to_dict() for r in checks],
            "warnings": traj.warnings,
        }
        write_trajectory(traj, folder / "traj.csv")
        if cert is not None:
            atomic_write(folder / "certificate.json", dump_json(cert.to_dict()))
        atomic_write(folder / "report.json", dump_json(report))
        title = f"{name}, phi = {tuple(phi.params.get('value', []))}"
        atomic_write(folder / "plot.svg", _plot(traj, cert, title))
    return all_ok


def cmd_example(args) -> int:
    if args.id not in EXAMPLES:
        print(f"unknown example {args.id!r}; choose from {', '.join(EXAMPLES)}", file=sys.stderr)
        return EX_USAGE
    try:
        ok = run_example(args.id, Path(args.out), args.step, args.horizon, _seed(args.seed))
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EX_IO
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EX_USAGE
    return EX_OK if ok else EX_CHECK


# simulate ---------------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        run = load_config(args.config)
        if run.phi is None:
            raise ConfigError("simulate needs an initial history 'phi'")
        run.solver.check(run.system)
    except ConfigError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EX_DATA
    except ValueError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EX_DATA
    out = Path(args.out)
    traj, diverged = _run(run.system, run.phi, run.solver)
    write_trajectory(traj, out / "traj.csv")
    if args.plot:
        atomic_write(out / "plot.svg", _plot(traj, None, run.system.name))
    for w in traj.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if diverged:
        print(f"solver diverged at t={traj.T:.6g}", file=sys.stderr)
        return EX_CHECK
    return EX_OK


# certify ----------------------------------------------------------------------


def cmd_certify(args) -> int:
    try:
        run = load_config(args.config)
    except ConfigError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EX_DATA
    out = Path(args.out)
    system = run.system
    checks = asm.check_assumptions(system, rng_seed=run.seed)
    record = {"assumptions": [r.to_dict() for r in checks]}
    failed = [r.assumption for r in checks if r.verdict == "fail"]
    if failed:
        record["result"] = f"assumptions failed: {', '.join(failed)}"
        atomic_write(out / "checks.json", dump_json(record))
        print(record["result"], file=sys.stderr)
        return EX_ASSUME
    try:
        if run.v is not None:
            v = asm.validate_certificate_vector(system, run.v)
        else:
            v = asm.find_certificate_vector(system, rng_seed=run.seed)
    except (asm.CertificateSearchError, ValueError) as exc:
        record["result"] = f"no certificate vector: {exc}"
        record["best_slack"] = getattr(exc, "best_slack", None)
        atomic_write(out / "checks.json", dump_json(record))
        print(record["result"], file=sys.stderr)
        return EX_NOVEC
    record["v"] = list(v.v)
    record["slack"] = list(v.slack)
    if args.phi_norm is not None:
        phi_norm = args.phi_norm
    elif run.phi is not None and run.phi_given:
        phi_norm = run.phi.norm(v.v, system.r, run.solver.h)
    else:
        phi_norm = None
    try:
        cert = build_certificate(system, v, phi_norm)
    except ScopeError as exc:
        record["result"] = f"scope refused: {exc}"
        atomic_write(out / "checks.json", dump_json(record))
        print(record["result"], file=sys.stderr)
        return EX_ASSUME
    except InfeasibleError as exc:
        record["result"] = str(exc)
        atomic_write(out / "checks.json", dump_json(record))
        print(record["result"], file=sys.stderr)
        return EX_NOVEC
    record["result"] = "certificate issued"
    atomic_write(out / "checks.json", dump_json(record))
    atomic_write(out / "certificate.json", dump_json(cert.to_dict()))
    return EX_OK


# verify -----------------------------------------------------------------------


def cmd_verify(args) -> int:
    try:
        traj = read_trajectory(args.traj)
        with open(args.cert) as fh:
            cert = Certificate.from_json(fh.read())
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EX_IO
    except (ConfigError, ValueError) as exc:
        print(f"cannot parse input: {exc}", file=sys.stderr)
        return EX_DATA
    if traj.dim != cert.dim:
        print(f"trajectory has {traj.dim} components, certificate has {cert.dim}", file=sys.stderr)
        return EX_DATA
    reports = [verify_positivity(traj), verify_norm_bound(traj, cert.v)]
    extra = {}
    try:
        reports.append(verify_envelope(traj, cert))
    except ScopeError as exc:
        extra["envelope"] = f"scope error: {exc}"
    reports.append(detect_nonconvergence(traj))
    passed = all(r.passed for r in reports) and not extra
    doc = {"pass": passed, "checks": _checks_dict(reports)}
    doc.update(extra)
    out = Path(args.out) if args.out else Path(args.traj).parent
    atomic_write(out / "report.json", dump_json(doc))
    for r in reports:
        print(f"{r.check}: {'pass' if r.passed else 'FAIL'} (worst {r.worst_violation:.3g})")
    return EX_OK if passed else EX_CHECK


# entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mlstab", description="Mittag-Leffler stability of fractional delay systems")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("example", help="run a built-in example end to end")
    e.add_argument("id")
    e.add_argument("--out", default="out")
    e.add_argument("--step", type=float, default=1e-3)
    e.add_argument("--horizon", type=float, default=20.0)
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_example)

    s = sub.add_parser("simulate", help="solve a configured system and write traj.csv")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=".")
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("certify", help="check assumptions and compute a decay certificate")
    c.add_argument("--config", required=True)
    c.add_argument("--out", default=".")
    c.add_argument("--phi-norm", type=float, default=None)
    c.set_defaults(func=cmd_certify)

    v = sub.add_parser("verify", help="check a trajectory against a certificate")
    v.add_argument("--traj", required=True)
    v.add_argument("--cert", required=True)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EX_IO


if __name__ == "__main__":
    sys.exit(main())
