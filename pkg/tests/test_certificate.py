import math

import numpy as np
import pytest

from mlstab.certificate import (
    Certificate,
    InfeasibleError,
    ScopeError,
    build_certificate,
    compute_beta,
    envelope_ratio,
    find_rate_constant,
    rate_inequality_lhs,
    sup_I,
)
from mlstab.special import mittag_leffler
from mlstab.system import DelayTerm, SystemSpec, VectorField, builtin_example, make_delay, make_field


@pytest.fixture(scope="module")
def cert1():
    return build_certificate(builtin_example("example1").system, (0.3, 0.2), 0.75)


@pytest.fixture(scope="module")
def cert2():
    return build_certificate(builtin_example("example2").system, (0.75, 1.0), 0.4)


def test_compute_beta():
    assert compute_beta((0.71, 0.61), 1) == pytest.approx(0.61)
    assert compute_beta((0.95, 0.7), 2) == pytest.approx(0.35)
    assert compute_beta((0.5, 0.5), 1) == 0.5
    with pytest.raises(ValueError):
        compute_beta((0.5,), 0.5)


@pytest.mark.parametrize("c", [1e-6, 0.3, 0.99])
def test_sup_is_one_when_orders_match(c):
    assert sup_I(0.61, 0.61, c) == 1.0


def test_ratio_tail_approaches_gamma_quotient():
    ratio = envelope_ratio(0.35, 0.7, 0.1, 1e8)
    limit = math.gamma(0.65) / math.gamma(0.3)
    assert abs(ratio / limit - 1) < 0.05


def test_sup_includes_tail():
    limit = math.gamma(0.65) / math.gamma(0.3)
    assert sup_I(0.35, 0.7, 0.1) >= limit


def test_sup_is_finite_for_builtin_parameters():
    for beta, alphas, p in [(0.61, (0.71, 0.61), 1), (0.35, (0.95, 0.7), 2)]:
        for a in alphas:
            for c in (1e-9, 1e-3, 0.2, 0.9):
                s = sup_I(beta, a, c, power=p)
                assert 0 <= s <= 1e6


def test_sup_domain():
    with pytest.raises(ValueError):
        sup_I(0.8, 0.5, 0.1)
    with pytest.raises(ValueError):
        sup_I(0.5, 0.8, 1.0)
    with pytest.raises(ValueError):
        sup_I(0.5, 0.8, 0.1, power=0.5)


def test_example1_certificate(cert1):
    assert cert1.scope == "local" and cert1.beta == pytest.approx(0.61)
    assert 0 < cert1.c < 1
    lhs = rate_inequality_lhs(builtin_example("example1").system, cert1.v, cert1.c, 0.75)
    assert np.all(lhs <= 1e-12)
    assert cert1.nu == pytest.approx(0.75 / mittag_leffler(-cert1.c, 0.61))


def test_rate_is_maximal(cert1):
    system = builtin_example("example1").system
    bumped = cert1.c * (1 + 1e-5)
    assert np.any(rate_inequality_lhs(system, cert1.v, bumped, 0.75) > 0)


def test_example2_certificate_is_global(cert2):
    assert cert2.scope == "global" and cert2.beta == pytest.approx(0.35)
    lhs = rate_inequality_lhs(builtin_example("example2").system, cert2.v, cert2.c, 0.4)
    assert np.all(lhs <= 1e-12)


def test_local_scope_refused():
    system = builtin_example("example1").system
    with pytest.raises(ScopeError):
        build_certificate(system, (0.3, 0.2), 4.0)
    with pytest.raises(ScopeError):
        build_certificate(system, (0.3, 0.2))


def test_zero_slack_is_infeasible():
    # f(v) = -v, g(v) = v: the slack vanishes for every v
    f = make_field("linear", matrix=[[-1.0, 0.0], [0.0, -1.0]])
    tau, r = make_delay("constant", tau=0.5)
    system = SystemSpec((0.5, 0.5), f, (DelayTerm(make_field("identity", dim=2), tau, r),))
    with pytest.raises(InfeasibleError):
        find_rate_constant(system, np.array([1.0, 1.0]), 0.5)


def test_commensurate_linear_limit():
    f = make_field("linear", matrix=[[-2.0, 1.0], [1.0, -2.0]])
    tau, r = make_delay("constant", tau=0.5)
    g = make_field("linear", matrix=[[0.0, 0.5], [0.5, 0.0]])
    system = SystemSpec((0.5, 0.5), f, (DelayTerm(g, tau, r),))
    v = np.array([1.0, 1.0])
    lhs = rate_inequality_lhs(system, v, 1e-12, 0.5)
    np.testing.assert_allclose(lhs, system.total_field(v) / v, atol=1e-9)
    assert 0 < find_rate_constant(system, v, 0.5) < 1


def test_envelope_shape_and_monotonicity(cert1):
    np.testing.assert_allclose(cert1.envelope(0.0), cert1.nu * np.array(cert1.v))
    t = np.linspace(0, 50, 501)
    env = cert1.envelope(t)
    assert env.shape == (501, 2)
    assert np.all(np.diff(env, axis=0) <= 0)
    with pytest.raises(ValueError):
        cert1.envelope(-1.0)


def test_envelope_dominates_history(cert1):
    assert np.all(cert1.envelope(0.0) >= np.array([0.2, 0.15]))


def test_json_round_trip(cert1):
    back = Certificate.from_json(cert1.to_json())
    assert back == cert1
    d = cert1.to_dict()
    assert set(["v", "beta", "c", "nu", "scope", "sup_I"]) <= set(d)


def test_certificate_invariants():
    with pytest.raises(ValueError):
        Certificate((1.0,), 0.5, 1.5, 1.0, (1.0,), "global", 1.0)
    with pytest.raises(ValueError):
        Certificate((1.0,), 0.5, 0.5, 1.0, (1.0,), "partial", 1.0)
    with pytest.raises(ValueError):
        Certificate.from_dict({"v": [1.0]})


def test_unit_order_components_are_admitted():
    f = VectorField(2, lambda w: np.array([-2 * w[0] + w[1], w[0] - 3 * w[1]]), 1.0)
    system = SystemSpec((1.0, 0.8), f)
    cert = build_certificate(system, (1.0, 1.0), 0.5)
    assert cert.beta == pytest.approx(0.8)
    assert cert.sup_I[0] >= 0
