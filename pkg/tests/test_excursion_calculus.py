import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize, special

from bmlab.errors import DomainError, ToleranceError
from bmlab.excursion_calculus import (LaplaceExponent, TailFunction, _quad, laplace_exponent,
                                      laplace_exponent_bracket, lil_gauge, tail, tail_bracket,
                                      triple_log_form)


def log_moment_closed(A):
    """Oracle for int_0^A (-log s) s exp(-s^2/2) ds via exponential integrals."""
    U = A * A / 2
    inner = -math.exp(-U) * math.log(U) - np.euler_gamma - special.exp1(U)
    return -0.5 * (math.log(2) * -math.expm1(-U) + inner)


def tail_closed(theta, a, delta):
    A = delta / math.sqrt(theta)
    return a * math.sqrt(2 * math.pi) * (log_moment_closed(A)
                                         - 0.5 * math.log(theta) * -math.expm1(-A * A / 2))


def tail_raw(theta, a, delta):
    """Oracle in the original radial variable, high-precision quadrature."""
    f = lambda r: -mpmath.log(r) * mpmath.exp(-r * r / (2 * theta)) * r
    val = mpmath.quad(f, [0, math.sqrt(theta), 5 * math.sqrt(theta), delta])
    return float(a * mpmath.sqrt(2 * mpmath.pi) * val / theta)


@pytest.mark.parametrize("theta", [1e-1, 1e-3, 1e-6, 1e-10, 1e-14])
def test_tail_against_closed_form(theta):
    tf = TailFunction(0.3, 0.5)
    assert tail(theta, tf) == pytest.approx(tail_closed(theta, 0.3, 0.5), rel=1e-9)


@pytest.mark.parametrize("theta", [1e-2, 1e-3])
def test_tail_against_radial_integral(theta):
    tf = TailFunction(0.25, 0.4)
    assert tail(theta, tf) == pytest.approx(tail_raw(theta, 0.25, 0.4), rel=1e-8)


def test_tail_domain():
    tf = TailFunction(0.4, 0.5)
    for th in (0.0, -1.0, 0.25, 0.3):
        with pytest.raises(DomainError):
            tail(th, tf)
    with pytest.raises(DomainError):
        TailFunction(0.5)
    with pytest.raises(DomainError):
        TailFunction(0.2, delta=1.0)


def test_zero_rate_gives_zero():
    tf = TailFunction(0.0)
    assert tail(1e-6, tf) == 0.0
    assert laplace_exponent(1e4, LaplaceExponent(tf)) == 0.0
    with pytest.raises(DomainError):
        lil_gauge(1e-6, LaplaceExponent(tf))


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.01, 0.49), k=st.floats(0.05, 0.99), logth=st.floats(-14, -2))
def test_linear_in_rate(a, k, logth):
    th = 10.0 ** logth
    t1 = tail(th, TailFunction(a))
    t2 = tail(th, TailFunction(a * k))
    assert t2 == pytest.approx(k * t1, rel=1e-12)


def test_phi_linear_in_rate():
    p1 = laplace_exponent(1e5, LaplaceExponent(TailFunction(0.4)))
    p2 = laplace_exponent(1e5, LaplaceExponent(TailFunction(0.1)))
    assert p2 == pytest.approx(p1 / 4, rel=1e-12)


def test_tail_grows_like_log():
    tf = TailFunction(0.4)
    assert tail(1e-8, tf) / math.log(1e8) == pytest.approx(0.4 * math.sqrt(math.pi / 2), rel=0.02)


def test_window_independence():
    a = 0.4
    d6 = tail(1e-6, TailFunction(a, 0.3)) - tail(1e-6, TailFunction(a, 0.1))
    d8 = tail(1e-8, TailFunction(a, 0.3)) - tail(1e-8, TailFunction(a, 0.1))
    assert abs(d8 - d6) < 0.01 * tail(1e-6, TailFunction(a, 0.1))


def test_const_cap_is_tail_at_window_edge():
    tf = TailFunction(0.4, 0.5)
    assert tf.const_cap == pytest.approx(tail_closed(0.25, 0.4, 0.5), rel=1e-9)
    lo, hi = tail_bracket(1e-4, tf)
    assert hi - lo == pytest.approx(tf.const_cap)


def phi_oracle(lam, a, delta):
    """Phi(lam) = int_0^{lam d} H(w/lam) e^{-w} dw with the closed-form tail, in w directly."""
    d = delta * delta
    f = lambda w: tail_closed(w / lam, a, delta) * math.exp(-w)
    pts = [p for p in (1.0, 10.0, 50.0) if p < lam * d]
    val, _ = integrate.quad(f, 0, min(lam * d, 800.0), points=pts or None, limit=400, epsrel=1e-11)
    return val


@pytest.mark.parametrize("lam", [1.0, 10.0, 1e3, 1e6])
def test_phi_against_oracle(lam):
    le = LaplaceExponent(TailFunction(0.4, 0.5))
    assert laplace_exponent(lam, le) == pytest.approx(phi_oracle(lam, 0.4, 0.5), rel=1e-6)


@pytest.mark.parametrize("lam", [1e3, 1e4, 1e6])
def test_exchange_identity(lam):
    """Phi by parts: H(d)(1 - e^{-lam d}) + int (-H') (1 - e^{-lam u}) du, H' by finite differences."""
    tf = TailFunction(0.4, 0.5)
    d = tf.delta ** 2
    h = 1e-4

    def density(u):
        return -(tail(u * math.exp(h), tf) - tail(u * math.exp(-h), tf)) / (2 * h * u)

    g = lambda v: density(math.exp(v)) * -math.expm1(-lam * math.exp(v)) * math.exp(v)
    edge = d * math.exp(-2 * h)
    body, _ = integrate.quad(g, -60, math.log(edge), limit=400, epsrel=1e-9,
                             points=[-math.log(lam)])
    direct = tail(edge, tf) * -math.expm1(-lam * edge) + body
    assert direct == pytest.approx(laplace_exponent(lam, LaplaceExponent(tf)), rel=0.01)


def test_phi_nondecreasing():
    le = LaplaceExponent(TailFunction(0.4))
    vals = [laplace_exponent(l, le) for l in (1e3, 1e4, 1e6)]
    assert vals == sorted(vals)


@settings(max_examples=20, deadline=None)
@given(l1=st.floats(0, 12), l2=st.floats(0, 12))
def test_phi_monotone_property(l1, l2):
    le = LaplaceExponent(TailFunction(0.3))
    lo, hi = sorted((10 ** l1, 10 ** l2))
    assert laplace_exponent(lo, le) <= laplace_exponent(hi, le) * (1 + 1e-9)


def test_phi_domain_and_tolerance():
    le = LaplaceExponent(TailFunction(0.4))
    with pytest.raises(DomainError):
        laplace_exponent(0.5, le)
    with pytest.raises(DomainError):
        LaplaceExponent(TailFunction(0.4), rel_tol=1e-20)
    with pytest.raises(ToleranceError) as info:
        _quad(lambda x: math.sin(1 / x) / x, 1e-6, 1, 1e-10, "oscillatory")
    assert info.value.error_bound > 0


def test_phi_bracket():
    le = LaplaceExponent(TailFunction(0.4))
    lo, hi = laplace_exponent_bracket(1e5, le)
    assert hi - lo == pytest.approx(le.tail.const_cap)


def test_sandwich_with_fitted_constant():
    le = LaplaceExponent(TailFunction(0.4))
    c = le.slope
    lams = np.geomspace(1e4, 1e12, 9)
    phis = np.array([laplace_exponent(l, le) for l in lams])
    const = np.max(phis - 1.05 * c * np.log(lams))
    assert np.all(phis >= 0.95 * c * np.log(lams))
    assert np.all(phis <= const + 1.05 * c * np.log(lams))
    # the constant is bounded: Phi - c log(lam) settles
    offset = phis - c * np.log(lams)
    assert np.ptp(offset[-4:]) < 0.01


def test_gauge_positive_and_decreasing():
    le = LaplaceExponent(TailFunction(0.4))
    eps = np.geomspace(1e-5, 1e-12, 15)
    g = np.array([lil_gauge(e, le) for e in eps])
    assert np.all(g > 0)
    assert np.all(np.diff(g) < 0)
    # near 1e-4 the gauge still rises before turning down
    assert lil_gauge(10 ** -4.5, le) > lil_gauge(1e-4, le)


def test_gauge_domain_error_where_log_phi_is_small():
    le = LaplaceExponent(TailFunction(0.4))
    # Phi(1/eps) = e makes log|log Phi| = 0
    lam_e = optimize.brentq(lambda l: laplace_exponent(l, le) - math.e, 10, 1e4)
    with pytest.raises(DomainError):
        lil_gauge(1 / lam_e, le)
    with pytest.raises(DomainError):
        lil_gauge(2.0, le)


def test_triple_log_form_value():
    eps = math.exp(-math.exp(math.exp(1)))
    assert triple_log_form(eps) == pytest.approx(math.exp(-math.e), rel=1e-12)
