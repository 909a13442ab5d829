"""Local Mittag-Leffler stability of a two-state system with a sine delay.

A small history decays under the certified envelope. A history four times
larger than the certificate vector allows blows up in finite time.
"""
import numpy as np

from mlstab import (
    DivergenceError,
    ScopeError,
    SolverConfig,
    build_certificate,
    builtin_example,
    check_assumptions,
    detect_nonconvergence,
    solve,
    verify_envelope,
)

ex = builtin_example("example1")
system, v = ex.system, np.array(ex.v)

print("assumption checks")
for rep in check_assumptions(system):
    print(f"  {rep.assumption:<24} {rep.verdict}")
print("f(v) + g(v) at v = (0.3, 0.2):", system.total_field(v))

small, large = ex.phis
cert = build_certificate(system, v, small.norm(v, system.r))
print(f"certificate: beta={cert.beta:g}  c={cert.c:.6f}  nu={cert.nu:.6f}  scope={cert.scope}")

traj = solve(system, small, SolverConfig(h=1e-3, T=20.0))
env = verify_envelope(traj, cert)
print(f"small history: envelope margin {-env.worst_violation:.3e}, "
      f"w(20) = {traj.states[-1]}, envelope(20) = {cert.envelope(20.0)}")

try:
    build_certificate(system, v, large.norm(v, system.r))
except ScopeError as exc:
    print("large history:", exc)
try:
    solve(system, large, SolverConfig(h=1e-3, T=20.0))
except DivergenceError as exc:
    traj = exc.trajectory
    print(f"large history blows up near t = {traj.t[-1]:.3f}; "
          f"convergent: {detect_nonconvergence(traj).passed}")
