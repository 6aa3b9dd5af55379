"""Closed-form (quadrature) engine for the decoding and detection probabilities.

Five quantities are produced for a scenario:

``decode_ue``            downlink decoding at the typical UE
``decode_bs_1st``        uplink decoding at the BS when decoding goes first
``detect_bs_2nd_joint``  decode first, then detect (product of marginals)
``detect_bs_1st``        radar detection at the BS when detection goes first
``decode_bs_2nd_joint``  detect first, then decode (product of marginals)

The link distances R0 and rho are integrated as independent Rayleigh
variables, rho outside and R0 inside.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import quad
from .interference import (LtContext, conditioned_log, lt_h1_squared, lt_repulsion,
                           lt_unconditioned, unconditioned_exponent)
from .params import Scenario, fading_constants

QUANTITIES = ("decode_ue", "decode_bs_1st", "detect_bs_2nd_joint",
              "detect_bs_1st", "decode_bs_2nd_joint")

OUTER_REL, OUTER_ABS = 1e-8, 1e-10
INNER_REL, INNER_ABS = 1e-9, 1e-10


class SuicOrder(enum.Enum):
    DECODE_FIRST = "decode-first"
    DETECT_FIRST = "detect-first"


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: float
    error: float

    def clamped(self) -> float:
        return min(max(self.value, 0.0), 1.0)

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class AnalysisReport:
    order: SuicOrder
    p_decode_ue: ProbabilityEstimate
    p_stage1: ProbabilityEstimate
    p_stage2_given: ProbabilityEstimate
    p_stage2_joint: ProbabilityEstimate


def _estimate(res: quad.QuadResult, extra_err=0.0, what="probability") -> ProbabilityEstimate:
    res.check(what)
    return ProbabilityEstimate(res.value, res.est_error + extra_err)


def _expect_rho_r0(kernel, sc: Scenario, what, knees=None) -> ProbabilityEstimate:
    """E over independent rho (outer) and R0 (inner) of kernel(rho, r0).

    ``knees(rho)`` lists R0 values where the kernel turns over; the inner
    integral is split there so narrow features at small R0 are not missed.
    """
    p = sc.params
    fc = fading_constants()
    inner_err = [0.0]

    def outer(rho):
        breaks = knees(rho) if knees is not None else ()
        r = quad.expect_r0(lambda r0: kernel(rho, r0), p, fc, INNER_REL, INNER_ABS, breaks=breaks)
        r.check(what + " (inner)")
        inner_err[0] = max(inner_err[0], r.est_error)
        return r.value

    res = quad.expect_rho(outer, p, OUTER_REL, OUTER_ABS)
    return _estimate(res, inner_err[0], what)


def _bs_field_log(sc: Scenario, rho, s_bs, s_ue):
    """log of the intercell factor at the typical BS.

    Conditioned BS field at rho, unconditioned UE field beyond rho/2;
    ``s_bs`` / ``s_ue`` are already scaled by the transmit powers.
    """
    if not sc.intercell:
        return 0.0
    ctx = LtContext.from_params(sc.params)
    return conditioned_log(s_bs, rho, ctx) - unconditioned_exponent(s_ue, rho / 2.0, ctx)


def p_decode_ue(sc: Scenario) -> ProbabilityEstimate:
    """Downlink decoding probability at the typical UE."""
    p = sc.params
    ctx = LtContext.from_params(p)

    def g(r0):
        s = sc.theta_b * r0 ** p.eta / p.p_b  # per unit interfering power
        val = math.exp(-s * (p.sigma2 + p.p_u * p.zeta))
        if sc.intercell and val > 0.0:
            val *= lt_unconditioned(s * p.p_b, r0, ctx) * lt_repulsion(s * p.p_u, ctx)
        return val

    return _estimate(quad.expect_r0(g, p, fading_constants(), OUTER_REL, OUTER_ABS), what="decode_ue")


def _uplink_kernel(sc: Scenario, with_echo: bool):
    p = sc.params
    r1_2eta = sc.r1 ** (2.0 * p.eta)

    def kernel(rho, r0):
        s = sc.theta_u * r0 ** p.eta / p.p_u  # per unit interfering power
        val = math.exp(-s * (p.sigma2 + p.p_b * p.zeta))
        if val == 0.0:
            return 0.0
        if with_echo:
            val *= lt_h1_squared(s * p.p_b / r1_2eta)
        return val * math.exp(_bs_field_log(sc, rho, s * p.p_b, s * p.p_u))

    return kernel


def _uplink_knees(sc: Scenario, with_echo: bool):
    # R0 where each exponent in the kernel reaches 1: s = theta_u R0^eta / P_u
    p = sc.params
    inv = 1.0 / p.eta
    fixed = []
    noise = p.sigma2 + p.p_b * p.zeta
    if noise > 0:
        fixed.append((p.p_u / (sc.theta_u * noise)) ** inv)
    if with_echo:
        fixed.append((p.p_u * sc.r1 ** (2.0 * p.eta) / (sc.theta_u * p.p_b)) ** inv)
    field = (p.p_u / (sc.theta_u * p.p_b)) ** inv  # times rho: intercell BS field

    def knees(rho):
        return [*fixed, field * rho] if sc.intercell else fixed

    return knees


def _expect_uplink(sc: Scenario, with_echo: bool, what) -> ProbabilityEstimate:
    kernel = _uplink_kernel(sc, with_echo)
    knees = _uplink_knees(sc, with_echo)
    if not sc.intercell:
        res = quad.expect_r0(lambda r0: kernel(0.0, r0), sc.params, fading_constants(),
                             OUTER_REL, OUTER_ABS, breaks=knees(0.0))
        return _estimate(res, what=what)
    return _expect_rho_r0(kernel, sc, what, knees)


def p_decode_bs_first(sc: Scenario) -> ProbabilityEstimate:
    """Uplink decoding at the BS with the radar echo still present."""
    return _expect_uplink(sc, True, "decode_bs_1st")


def p_decode_bs_second_given(sc: Scenario) -> ProbabilityEstimate:
    """Uplink decoding at the BS once the echo has been removed."""
    return _expect_uplink(sc, False, "decode_bs_2nd_given")


def _radar_terms(sc: Scenario):
    p = sc.params
    fc = fading_constants()
    s = fc.eps_r * sc.theta_b * sc.r1 ** (2.0 * p.eta) / p.p_b  # per unit interfering power
    return fc, s, -s * (p.p_b * p.zeta + p.sigma2)


def p_detect_bs_second_given(sc: Scenario) -> ProbabilityEstimate:
    """Radar detection at the BS after the uplink message has been removed."""
    fc, s, log_expo = _radar_terms(sc)
    p = sc.params

    def g(rho):
        # 1 - expo * LTs via expm1; the product is often within ulps of 1
        miss = -math.expm1(log_expo + _bs_field_log(sc, rho, s * p.p_b, s * p.p_u))
        return miss ** fc.m_r

    if not sc.intercell:
        return ProbabilityEstimate(1.0 - g(0.0), 0.0)
    res = quad.expect_rho(g, p, OUTER_REL, OUTER_ABS)
    est = _estimate(res, what="detect_bs_2nd_given")
    return ProbabilityEstimate(1.0 - est.value, est.error)


def p_detect_bs_first(sc: Scenario) -> ProbabilityEstimate:
    """Radar detection at the BS with the uplink signal still present."""
    fc, s, log_expo = _radar_terms(sc)
    p = sc.params
    a = s * p.p_u  # intracell uplink: Rayleigh faded at R0, transform 1/(1 + a R0^-eta)

    def inner(q):
        # q = 1 - (noise, RSI and intercell factor); with w = R0^eta / a
        # 1 - q_c w/(1+w) = (1 + q w)/(1 + w) has no cancellation
        def g(r0):
            w = r0 ** p.eta / a
            if math.isinf(w):
                return q ** fc.m_r
            return ((1.0 + q * w) / (1.0 + w)) ** fc.m_r

        knees = [a ** (1.0 / p.eta)]
        if 0.0 < q < 1.0:
            knees.append((a / q) ** (1.0 / p.eta))
        return quad.expect_r0(g, p, fc, INNER_REL, INNER_ABS, breaks=knees)

    if not sc.intercell:
        est = _estimate(inner(-math.expm1(log_expo)), what="detect_bs_1st")
        return ProbabilityEstimate(1.0 - est.value, est.error)

    inner_err = [0.0]

    def outer(rho):
        r = inner(-math.expm1(log_expo + _bs_field_log(sc, rho, s * p.p_b, s * p.p_u)))
        r.check("detect_bs_1st (inner)")
        inner_err[0] = max(inner_err[0], r.est_error)
        return r.value

    est = _estimate(quad.expect_rho(outer, p, OUTER_REL, OUTER_ABS), inner_err[0], "detect_bs_1st")
    return ProbabilityEstimate(1.0 - est.value, est.error)


def _product(a: ProbabilityEstimate, b: ProbabilityEstimate) -> ProbabilityEstimate:
    return ProbabilityEstimate(a.value * b.value, a.error * abs(b.value) + b.error * abs(a.value))


def evaluate_order(sc: Scenario, order: SuicOrder, decode_ue: ProbabilityEstimate | None = None) -> AnalysisReport:
    order = SuicOrder(order)
    ue = decode_ue if decode_ue is not None else p_decode_ue(sc)
    if order is SuicOrder.DECODE_FIRST:
        first, given = p_decode_bs_first(sc), p_detect_bs_second_given(sc)
    else:
        first, given = p_detect_bs_first(sc), p_decode_bs_second_given(sc)
    return AnalysisReport(order, ue, first, given, _product(first, given))


def evaluate_all(sc: Scenario, orders=(SuicOrder.DECODE_FIRST, SuicOrder.DETECT_FIRST),
                 include_ue=True) -> dict[str, ProbabilityEstimate]:
    """The five reported quantities (restricted to ``orders``) keyed by name."""
    out: dict[str, ProbabilityEstimate] = {}
    ue = p_decode_ue(sc) if include_ue else None
    if ue is not None:
        out["decode_ue"] = ue
    for order in orders:
        rep = evaluate_order(sc, order, decode_ue=ue or ProbabilityEstimate(math.nan, math.nan))
        if rep.order is SuicOrder.DECODE_FIRST:
            out["decode_bs_1st"] = rep.p_stage1
            out["detect_bs_2nd_joint"] = rep.p_stage2_joint
        else:
            out["detect_bs_1st"] = rep.p_stage1
            out["decode_bs_2nd_joint"] = rep.p_stage2_joint
    return out


# ---------------------------------------------------------------------------
# SuIC order crossover

def order_gap(sc: Scenario) -> float:
    """Detect-first minus joint detect-second probability; positive favours detecting first."""
    joint = p_decode_bs_first(sc).value * p_detect_bs_second_given(sc).value
    return p_detect_bs_first(sc).value - joint


def _at(template: Scenario, variable: str, x: float) -> Scenario:
    if variable == "r1":
        return template.replace(r1=x)
    if variable == "p_u":
        return template.replace(p_u=x)
    raise ValueError(f"unsupported crossover variable {variable!r}")


def gap_curve(template: Scenario, variable: str, values) -> np.ndarray:
    return np.array([order_gap(_at(template, variable, float(x))) for x in values])


def find_crossover(template: Scenario, variable: str, lo: float, hi: float,
                   points: int = 12, rel_tol: float = 1e-3):
    """Locate where detect-first stops beating joint detect-second.

    The range is scanned on ``points`` log-spaced values; the first sign
    change is refined by bisection to ``rel_tol``.  Returns None when the gap
    keeps one sign over the whole range.
    """
    if points < 2 or not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi and at least two scan points")
    xs = np.geomspace(lo, hi, points)
    gaps = gap_curve(template, variable, xs)
    signs = np.sign(gaps)
    idx = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if len(idx) == 0:
        exact = np.nonzero(gaps == 0.0)[0]
        return float(xs[exact[0]]) if len(exact) else None
    a, b = float(xs[idx[0]]), float(xs[idx[0] + 1])
    ga = gaps[idx[0]]
    while (b - a) > rel_tol * 0.5 * (a + b):
        m = 0.5 * (a + b)
        gm = order_gap(_at(template, variable, m))
        if gm == 0.0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)
