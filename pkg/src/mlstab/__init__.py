"""Mittag-Leffler stability tools for multi-order fractional delay systems."""
from .special import PoleError, MLQuery, gamma, rgamma, mittag_leffler, caputo_derivative_of_envelope
from .system import (
    VectorField,
    DelayTerm,
    SystemSpec,
    InitialCondition,
    BuiltinExample,
    weighted_norm,
    jacobian_fd,
    register_field,
    register_delay,
    make_field,
    make_delay,
    builtin_example,
)
from .solver import SolverConfig, Trajectory, DivergenceError, abm_weights, solve
from .assumptions import (
    CheckReport,
    CertificateVector,
    CertificateSearchError,
    check_cooperative,
    estimate_degree,
    check_order_preserving,
    validate_certificate_vector,
    find_certificate_vector,
    check_assumptions,
)
from .certificate import (
    Certificate,
    ScopeError,
    InfeasibleError,
    compute_beta,
    sup_I,
    envelope_ratio,
    rate_inequality_lhs,
    find_rate_constant,
    build_certificate,
)
from .verify import (
    VerificationReport,
    verify_positivity,
    verify_norm_bound,
    verify_envelope,
    detect_nonconvergence,
)

__version__ = "0.1.0"
