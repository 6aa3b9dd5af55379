"""Adaptive quadrature for the semi-infinite integrals and the distance expectations.

The integration itself is QUADPACK (``scipy.integrate.quad``): on [0, inf) it
maps the half line onto (0, 1] and subdivides adaptively with 15-point
Gauss-Kronrod rules.  This module wraps it in the error-budget contract used
everywhere else and adds the two link-distance expectations.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

REL_TOL = 1e-8
ABS_TOL = 1e-10
LIMIT = 200


class QuadratureError(ArithmeticError):
    """Raised by callers that need a converged integral; carries the best estimate."""

    def __init__(self, message, result: "QuadResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class QuadResult:
    value: float
    est_error: float
    evaluations: int
    converged: bool = True

    def check(self, what="integral") -> "QuadResult":
        if not self.converged:
            raise QuadratureError(
                f"{what} did not converge: {self.value!r} +- {self.est_error!r}", self)
        return self


def _quad(f, a, b, rel_tol, abs_tol, limit) -> QuadResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, epsabs=abs_tol, epsrel=rel_tol,
                             limit=limit, full_output=1)
    value, err, info = out[0], out[1], out[2]
    ier = out[3] if len(out) > 3 else 0
    neval = int(info["neval"])
    ok = math.isfinite(value) and math.isfinite(err) and (
        ier == 0 or err <= max(abs_tol, rel_tol * abs(value)))
    return QuadResult(float(value), float(abs(err)), max(neval, 1), ok)


def integrate_semi_infinite(f: Callable[[float], float], rel_tol=REL_TOL,
                            abs_tol=ABS_TOL, limit=LIMIT) -> QuadResult:
    """Integrate ``f`` over [0, inf).

    A non-converged result is returned with ``converged=False`` rather than
    raised; call ``.check()`` to turn it into a QuadratureError.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    return _quad(f, 0.0, np.inf, rel_tol, abs_tol, limit)


def integrate_interval(f, a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL, limit=LIMIT) -> QuadResult:
    return _quad(f, a, b, rel_tol, abs_tol, limit)


_NEGLIGIBLE_U = 60.0  # exp(-60) ~ 1e-26


def _expect_rayleigh(g, scale, rel_tol, abs_tol, limit, breaks=()):
    # E[g(X)] for density 2 c x exp(-c x^2), c = scale; u = c x^2 makes the weight exp(-u)
    def integrand(u):
        return g(math.sqrt(u / scale)) * math.exp(-u)

    # a cut where the weight exp(-u) is already negligible only creates a huge
    # finite piece whose mass near u = 0 the rule can step over; drop it
    cuts = sorted({u for u in (scale * x * x for x in breaks if 0.0 < x < math.inf)
                   if u < _NEGLIGIBLE_U})
    if not cuts:
        return integrate_semi_infinite(integrand, rel_tol, abs_tol, limit)
    # split at the caller's kinks; the absolute budget is shared between pieces
    edges = [0.0, *cuts]
    share = abs_tol / len(edges)
    pieces = [_quad(integrand, a, b, rel_tol, share, limit) for a, b in zip(edges[:-1], edges[1:])]
    pieces.append(_quad(integrand, edges[-1], np.inf, rel_tol, share, limit))
    return QuadResult(sum(q.value for q in pieces), sum(q.est_error for q in pieces),
                      sum(q.evaluations for q in pieces), all(q.converged for q in pieces))


def expect_r0(g, params, fading=None, rel_tol=REL_TOL, abs_tol=ABS_TOL, limit=LIMIT,
              breaks=()) -> QuadResult:
    """E[g(R0)] under f_R0(x) = 2 pi b lam x exp(-pi b lam x^2).

    ``breaks`` lists R0 values where ``g`` changes scale abruptly; the
    integral is split there.
    """
    if fading is None:
        from .params import fading_constants
        fading = fading_constants()
    return _expect_rayleigh(g, math.pi * fading.b * params.lam, rel_tol, abs_tol, limit, breaks)


def expect_rho(g, params, rel_tol=REL_TOL, abs_tol=ABS_TOL, limit=LIMIT, breaks=()) -> QuadResult:
    """E[g(rho)] under f_rho(r) = 2 pi lam r exp(-pi lam r^2)."""
    return _expect_rayleigh(g, math.pi * params.lam, rel_tol, abs_tol, limit, breaks)


def r0_pdf(x, lam, b=13.0 / 10.0):
    return 2 * np.pi * b * lam * x * np.exp(-np.pi * b * lam * np.square(x))


def r0_cdf(x, lam, b=13.0 / 10.0):
    return -np.expm1(-np.pi * b * lam * np.square(x))


def rho_cdf(x, lam):
    return -np.expm1(-np.pi * lam * np.square(x))


class LogGridInterpolant:
    """Cubic spline of log f against log x on a fixed log-spaced grid.

    Outside the grid the exact function is called.  Immutable after
    construction.
    """

    def __init__(self, func, x_min, x_max, points_per_decade=16):
        decades = math.log10(x_max) - math.log10(x_min)
        n = max(int(math.ceil(decades * points_per_decade)) + 1, 4)
        grid = np.logspace(math.log10(x_min), math.log10(x_max), n)
        values = np.array([func(x) for x in grid])
        if np.any(values <= 0):
            raise ValueError("LogGridInterpolant needs a positive function")
        self._func = func
        self._lo = math.log(x_min)
        self._hi = math.log(x_max)
        self._spline = CubicSpline(np.log(grid), np.log(values))
        self.grid = grid

    def __call__(self, x):
        lx = math.log(x)
        if lx < self._lo or lx > self._hi:
            return self._func(x)
        return math.exp(float(self._spline(lx)))
