"""Special functions for the interference and fading transforms.

Only what the closed forms need: the Gauss hypergeometric function in the
specialization 2F1(1, 1-delta; 2-delta; z) for z <= 0, the scaled
complementary error function and the harmonic number at real argument.
"""
from __future__ import annotations

import math
from typing import NamedTuple

from scipy import special

EULER_GAMMA = 0.57721566490153286061

_MAX_TERMS = 4000
_EPS = 2.0 ** -55


class SpecFunResult(NamedTuple):
    value: float
    est_error: float


class ConvergenceError(ArithmeticError):
    pass


def _series_direct(z, b):
    # sum_n b/(n+b) z^n, |z| <= 1/2
    total = 0.0
    zn = 1.0
    for n in range(_MAX_TERMS):
        term = b / (n + b) * zn
        total += term
        if abs(term) <= _EPS * abs(total):
            return total, abs(term)
        zn *= z
    raise ConvergenceError(f"2F1 series did not converge at z={z}")


def _series_pfaff(z, b):
    # (1-z)^-1 * 2F1(1, 1; b+1; w), w = z/(z-1) in [1/3, 2/3]
    w = z / (z - 1.0)
    c = b + 1.0
    total = 0.0
    term = 1.0
    for n in range(_MAX_TERMS):
        total += term
        if term <= _EPS * total:
            return total / (1.0 - z), term / (1.0 - z)
        term *= (n + 1.0) / (c + n) * w
    raise ConvergenceError(f"2F1 Pfaff series did not converge at z={z}")


def _series_inverse(z, b):
    # b * [x^-b pi/sin(pi b) - sum_n (-1)^n x^-(n+1)/(n+1-b)],  x = -z >= 2
    x = -z
    tail = 0.0
    xn = 1.0 / x
    sign = 1.0
    for n in range(_MAX_TERMS):
        term = sign * xn / (n + 1.0 - b)
        tail += term
        if abs(term) <= _EPS * abs(tail):
            lead = math.pi / math.sin(math.pi * b) * x ** (-b)
            value = b * (lead - tail)
            # cancellation between the two pieces is bounded by |lead| ulp-scale
            return value, b * (abs(term) + _EPS * lead)
        xn /= x
        sign = -sign
    raise ConvergenceError(f"2F1 inverse series did not converge at z={z}")


def hyp2f1_interference_err(z: float, delta: float) -> SpecFunResult:
    """2F1(1, 1-delta; 2-delta; z) with a truncation-error estimate."""
    if z > 0:
        raise ValueError("z must be non-positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    b = 1.0 - delta
    if z == 0.0:
        return SpecFunResult(1.0, 0.0)
    if math.isinf(z):
        return SpecFunResult(0.0, 0.0)
    if z >= -0.5:
        value, err = _series_direct(z, b)
    elif z >= -2.0:
        value, err = _series_pfaff(z, b)
    else:
        value, err = _series_inverse(z, b)
    return SpecFunResult(value, err)


def hyp2f1_interference(z: float, delta: float) -> float:
    """Gauss 2F1(1, 1-delta; 2-delta; z) for z <= 0 and 0 < delta < 1.

    Uses the defining series on [-1/2, 0], the Pfaff transformation on
    [-2, -1/2) and the 1/z expansion below -2, so that every branch converges
    at least geometrically with ratio 2/3.
    """
    return hyp2f1_interference_err(z, delta).value


def erfcx(x):
    """exp(x^2) * erfc(x), evaluated without overflow."""
    if x < 0:
        raise ValueError("erfcx is only provided for x >= 0")
    return float(special.erfcx(x))


def harmonic_generalized(x: float) -> float:
    """Harmonic number H(x) = digamma(x + 1) + Euler-gamma at real x > 0."""
    if not x > 0:
        raise ValueError("x must be positive")
    return float(special.digamma(x + 1.0)) + EULER_GAMMA
