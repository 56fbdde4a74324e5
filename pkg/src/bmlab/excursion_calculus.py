"""Quadrature for the excursion-length tail and its Laplace exponent.

Near the pole, the tail of the excursion lifetime is

    H(theta) = a sqrt(2 pi) (1/theta) int_0^delta (-log r) exp(-r^2 / (2 theta)) r dr,

which after ``s^2 = r^2 / theta`` becomes

    a sqrt(2 pi) [ int_0^{delta/sqrt(theta)} (-log s) s exp(-s^2/2) ds
                   - log(sqrt(theta)) (1 - exp(-delta^2 / (2 theta))) ]

and grows like ``a sqrt(pi/2) log(1/theta)``. The Laplace exponent
``Phi(lam) = int_0^1 H(-log(t) / lam) dt`` then grows like ``a sqrt(pi/2) log(lam)``,
and the gauge of the local-time LIL is rebuilt from ``Phi``.

The kernel normalisation carries the factor ``sqrt(2 pi)`` exactly as displayed above;
the constant ``a sqrt(pi/2)`` depends on it. The contribution from outside the
``delta``-window is bounded but not modelled; it is reported as ``[0, const_cap]``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, ToleranceError

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_PI_2 = math.sqrt(math.pi / 2.0)

# integrands below decay like exp(-e^v); past these limits they are below 1e-300
_V_LO = -60.0


def _quad(f, lo, hi, rel_tol, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=400)
        except integrate.IntegrationWarning as w:
            val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=400,
                                      full_output=1)[:2]
            raise ToleranceError(f"{what}: quadrature did not converge ({w})", err) from None
    if abs(val) > 0 and err > max(rel_tol * abs(val), 1e-300) * 10:
        raise ToleranceError(f"{what}: error bound {err:g} exceeds tolerance", err)
    return val


def _log_moment(A: float, rel_tol: float = 1e-10) -> float:
    """``int_0^A (-log s) s exp(-s^2/2) ds`` in the variable ``v = log s``."""
    if A <= 0:
        return 0.0
    hi = min(math.log(A), 4.0)  # exp(-e^8 / 2) underflows
    f = lambda v: -v * math.exp(2.0 * v - 0.5 * math.exp(2.0 * v))
    # integrand changes sign at v = 0; integrate each signed piece on its own
    pos = _quad(f, _V_LO, min(hi, 0.0), rel_tol, "log moment")
    return pos + (_quad(f, 0.0, hi, rel_tol, "log moment") if hi > 0 else 0.0)


@dataclass(frozen=True)
class TailFunction:
    """Window approximation of the excursion-lifetime tail at local-time rate ``a``."""

    a: float
    delta: float = 0.5
    const_cap: float | None = None
    rel_tol: float = 1e-10

    def __post_init__(self):
        if not (0 <= self.a < 0.5):
            raise DomainError(f"a must lie in [0, 1/2), got {self.a}")
        if not (0 < self.delta < 1):
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.const_cap is None:
            object.__setattr__(self, "const_cap", _window_tail(self.delta ** 2, self))

    @property
    def slope(self) -> float:
        """Asymptotic constant ``a sqrt(pi/2)``."""
        return self.a * SQRT_PI_2


def _window_tail(theta: float, tf: TailFunction) -> float:
    if tf.a == 0:
        return 0.0
    A = tf.delta / math.sqrt(theta)
    first = _log_moment(A, tf.rel_tol)
    second = -0.5 * math.log(theta) * -math.expm1(-0.5 * A * A)
    return tf.a * SQRT_2PI * (first + second)


def tail(theta: float, tf: TailFunction) -> float:
    """Window tail ``H(theta)`` for ``0 < theta < delta^2``."""
    if not (0 < theta < tf.delta ** 2):
        raise DomainError(f"theta={theta} outside (0, delta^2={tf.delta ** 2})")
    return _window_tail(theta, tf)


def tail_bracket(theta: float, tf: TailFunction):
    """``(low, high)`` including the bounded outside-window remainder in ``[0, const_cap]``."""
    h = tail(theta, tf)
    return h, h + tf.const_cap


@dataclass(frozen=True)
class LaplaceExponent:
    tail: TailFunction
    rel_tol: float = 1e-8

    def __post_init__(self):
        if not (1e-13 <= self.rel_tol < 1):
            raise DomainError(f"rel_tol must lie in [1e-13, 1), got {self.rel_tol}")

    def __call__(self, lam):
        return laplace_exponent(lam, self)

    @property
    def slope(self) -> float:
        return self.tail.slope


def laplace_exponent(lam: float, le: LaplaceExponent) -> float:
    """``Phi(lam) = int_{exp(-lam d)}^1 H(-log(t)/lam) dt`` with ``d = delta^2``.

    With ``u = -log(t)/lam`` and ``w = lam u = exp(v)`` this is
    ``int exp(v - e^v) H(e^v / lam) dv`` over ``v < log(lam d)``.
    """
    if not lam >= 1:
        raise DomainError(f"lambda must be >= 1, got {lam}")
    tf = le.tail
    if tf.a == 0:
        return 0.0
    d = tf.delta ** 2
    hi = min(math.log(lam * d), math.log(720.0))

    def f(v):
        w = math.exp(v)
        return math.exp(v - w) * _window_tail(w / lam, tf)

    return _quad(f, _V_LO, hi, le.rel_tol, f"Phi({lam:g})")


def laplace_exponent_bracket(lam: float, le: LaplaceExponent):
    """``(low, high)``: the window value, plus at most ``const_cap`` from outside the window."""
    phi = laplace_exponent(lam, le)
    return phi, phi + le.tail.const_cap


def _loglog_abs(phi: float) -> float:
    if not phi > 0:
        raise DomainError(f"Phi = {phi} must be positive for the gauge")
    L = abs(math.log(phi))
    if L == 0:
        raise DomainError("log Phi = 0 at this eps")
    return math.log(L)


def lil_gauge(eps: float, le: LaplaceExponent) -> float:
    """``a sqrt(pi/2) log|log Phi(1/eps)| / Phi(log|log Phi(1/eps)| / eps)``.

    Needs ``log|log Phi(1/eps)| > 0`` so that the gauge is positive.
    """
    if not (0 < eps <= 1):
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    LL = _loglog_abs(laplace_exponent(1.0 / eps, le))
    if not LL > 0:
        raise DomainError(f"log|log Phi(1/eps)| = {LL:.4g} is not positive at eps={eps}")
    lam = LL / eps
    if lam < 1:
        raise DomainError(f"Phi argument {lam} below 1")
    return le.slope * LL / laplace_exponent(lam, le)


def triple_log_form(eps: float) -> float:
    """``log log log(1/eps) / log(1/eps)``, the limit form of ``lil_gauge``."""
    L = math.log(1.0 / eps)
    return math.log(math.log(L)) / L


def tail_curve(thetas, tf: TailFunction) -> np.ndarray:
    return np.array([tail(float(t), tf) for t in thetas])


def phi_curve(lams, le: LaplaceExponent) -> np.ndarray:
    return np.array([laplace_exponent(float(l), le) for l in lams])
