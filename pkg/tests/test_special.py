import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special as sp

from mlstab.special import (
    MLQuery,
    PoleError,
    caputo_derivative_of_envelope,
    gamma,
    mittag_leffler,
    rgamma,
)

REFERENCE = json.loads(
    (Path(__file__).parent / "data" / "mittag_leffler_reference.json").read_text()
)


# Gamma ----------------------------------------------------------------------


def test_gamma_integers_and_half():
    assert gamma(5) == 24.0
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma(-0.5) == pytest.approx(-2 * math.sqrt(math.pi), rel=1e-15)


@pytest.mark.parametrize("x", [0, -1, -7])
def test_gamma_poles(x):
    with pytest.raises(PoleError):
        gamma(x)


def test_gamma_overflow_is_signalled():
    with pytest.raises(OverflowError):
        gamma(200.0)


def test_rgamma_vanishes_at_poles():
    assert np.all(rgamma(np.array([0.0, -1.0, -3.0])) == 0.0)
    assert rgamma(4.0) == pytest.approx(1 / 6)


# Mittag-Leffler: reference values --------------------------------------------


@pytest.mark.parametrize("row", REFERENCE, ids=lambda r: f"a{r['alpha']}-b{r['beta']}-x{r['x']}")
def test_mittag_leffler_matches_extended_precision(row):
    ref = float(row["value"])
    got = mittag_leffler(row["x"], row["alpha"], row["beta"])
    assert got == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_half_order_closed_form():
    # E_{1/2}(-z) = exp(z^2) erfc(z)
    z = np.array([0.0, 0.1, 1.0, 3.0, 7.5, 20.0, 100.0, 1e3])
    np.testing.assert_allclose(mittag_leffler(-z, 0.5), sp.erfcx(z), rtol=1e-11)


def test_half_order_at_minus_one():
    assert mittag_leffler(-1.0, 0.5) == pytest.approx(0.42758357615580700442, abs=1e-9)


def test_exponential_limit():
    x = np.linspace(-30, 3, 661)
    np.testing.assert_allclose(mittag_leffler(x, 1.0, 1.0), np.exp(x), rtol=1e-12, atol=0)


def test_other_closed_forms():
    x = np.linspace(-6, 2, 41)
    x = x[x != 0]
    np.testing.assert_allclose(mittag_leffler(x, 1.0, 2.0), np.expm1(x) / x, rtol=1e-12)
    y = np.linspace(0.1, 3.0, 30)
    np.testing.assert_allclose(mittag_leffler(-y**2, 2.0, 1.0), np.cos(y), atol=1e-12)
    np.testing.assert_allclose(mittag_leffler(-y**2, 2.0, 2.0), np.sin(y) / y, atol=1e-12)


def test_scalar_and_array_shapes():
    assert isinstance(mittag_leffler(-1.0, 0.7), float)
    out = mittag_leffler(np.zeros((2, 3)), 0.7, 1.3)
    assert out.shape == (2, 3)
    np.testing.assert_allclose(out, 1 / math.gamma(1.3))


def test_value_at_zero():
    assert mittag_leffler(0.0, 0.3, 2.5) == pytest.approx(1 / math.gamma(2.5), rel=1e-15)


@pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (-1.0, 1.0), (0.5, 0.0)])
def test_bad_parameters(alpha, beta):
    with pytest.raises(ValueError):
        mittag_leffler(-1.0, alpha, beta)


def test_nonfinite_argument():
    with pytest.raises(ValueError):
        mittag_leffler(np.nan, 0.5)


def test_large_alpha_outside_series_region_is_refused():
    with pytest.raises(ValueError):
        mittag_leffler(-1e4, 1.5)


def test_positive_overflow_gives_inf():
    with np.errstate(over="ignore"):
        assert mittag_leffler(800.0, 1.0) == np.inf


def test_query_object():
    q = MLQuery(0.5, 1.0, -1.0)
    assert q.evaluate() == mittag_leffler(-1.0, 0.5)
    with pytest.raises(ValueError):
        MLQuery(0.5, 1.0, math.inf)


# Properties -------------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.61, 0.95, 1.0])
def test_decreasing_and_bounded_on_negative_axis(alpha):
    x = -np.geomspace(1e-6, 1e6, 2000)[::-1]
    x = np.concatenate([x, [0.0]])
    e = mittag_leffler(x, alpha)
    # exp(-1e6) underflows to 0; algebraic decay for alpha < 1 does not
    assert np.all(e > 0) if alpha < 1 else np.all(e >= 0)
    assert np.all(e <= 1)
    assert np.all(np.diff(e) >= -1e-15)


def _product_grid():
    ts = np.arange(0, 10.01, 0.5)
    T, S = np.meshgrid(ts, ts)
    return T.ravel(), S.ravel()


@pytest.mark.parametrize("eta", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("alpha", [0.3, 0.61, 1.0])
def test_product_inequality(eta, alpha):
    t, s = _product_grid()
    lhs = mittag_leffler(-eta * t**alpha, alpha) * mittag_leffler(-eta * s**alpha, alpha)
    rhs = mittag_leffler(-eta * (t + s) ** alpha, alpha)
    assert t.size == 441
    assert np.all(lhs - rhs <= 1e-10)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.05, 1.0),
    x=st.floats(-1e5, 0.0),
)
def test_bounds_property(alpha, x):
    e = mittag_leffler(x, alpha)
    assert 0 <= e <= 1 + 1e-15
    # exp(x) underflows below about -745; algebraic tails for alpha < 1 never do
    if alpha < 1 or x > -700:
        assert e > 0


# Caputo derivative of the envelope --------------------------------------------


def _caputo_l1(y, t, alpha):
    """L1 scheme for the Caputo derivative on a nonuniform mesh."""
    n = len(t) - 1
    out = np.zeros(n + 1)
    dy = np.diff(y) / np.diff(t)
    for k in range(1, n + 1):
        tk = t[k]
        w = ((tk - t[:k]) ** (1 - alpha) - (tk - t[1 : k + 1]) ** (1 - alpha))
        out[k] = np.dot(w, dy[:k]) / math.gamma(2 - alpha)
    return out


@pytest.mark.parametrize("beta,alpha,c", [(0.61, 0.71, 0.3), (0.35, 0.7, 0.5), (0.5, 0.5, 1.0)])
def test_caputo_derivative_closed_form(beta, alpha, c):
    # graded mesh concentrates points near the singularity at t = 0
    t = 2.0 * (np.linspace(0, 1, 1500) ** 3)
    y = mittag_leffler(-c * t**beta, beta)
    num = _caputo_l1(y, t, alpha)
    check = (t > 0.5)
    exact = caputo_derivative_of_envelope(beta, alpha, c, t[check])
    np.testing.assert_allclose(num[check], exact, atol=1e-3)


def test_caputo_derivative_domain():
    with pytest.raises(ValueError):
        caputo_derivative_of_envelope(0.8, 0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        caputo_derivative_of_envelope(0.5, 0.8, 0.0, 1.0)
    with pytest.raises(ValueError):
        caputo_derivative_of_envelope(0.5, 0.8, 1.0, 0.0)
