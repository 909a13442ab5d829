"""Global Mittag-Leffler stability with homogeneous degree-2 fields.

No certificate vector is given, so one is searched. Both histories, including
one far outside the unit ball, are attracted to the origin.
"""
from mlstab import (
    SolverConfig,
    build_certificate,
    builtin_example,
    find_certificate_vector,
    solve,
    verify_envelope,
    verify_norm_bound,
    verify_positivity,
)

ex = builtin_example("example2")
system = ex.system
cv = find_certificate_vector(system, rng_seed=0)
print("searched v =", cv.v, " slack =", cv.slack)
print("(1, 1) slack:", system.total_field([1.0, 1.0]), "(not a certificate)")

for k, phi in enumerate(ex.phis, 1):
    cert = build_certificate(system, cv.v, phi.norm(cv.v, system.r))
    traj = solve(system, phi, SolverConfig(h=1e-3, T=20.0))
    checks = [verify_positivity(traj), verify_norm_bound(traj, cv.v), verify_envelope(traj, cert)]
    verdicts = ", ".join(f"{r.check}={'pass' if r.passed else 'fail'}" for r in checks)
    print(f"phi{k}={phi.params['value']}: beta={cert.beta:g} c={cert.c:.5f} nu={cert.nu:.4f}; {verdicts}; "
          f"w(20)={traj.states[-1]}")
