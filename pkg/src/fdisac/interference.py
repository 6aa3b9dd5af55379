"""Laplace transforms of intercell interference and the radar fading model.

All transforms take power-scaled arguments: the caller folds the transmit
power of the interfering field into ``s``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

from . import quad, specfun
from .params import FadingConstants, NetworkParams, fading_constants


@dataclass(frozen=True)
class LtContext:
    lam: float
    eta: float

    @property
    def delta(self) -> float:
        return 2.0 / self.eta

    @classmethod
    def from_params(cls, params: NetworkParams) -> "LtContext":
        return cls(params.lam, params.eta)


class GuardKind(enum.Enum):
    UNCONDITIONED = "unconditioned"
    CONDITIONED = "conditioned"
    REPULSION = "repulsion"


@dataclass(frozen=True)
class GuardSpec:
    kind: GuardKind
    psi: float = 0.0

    def __post_init__(self):
        if self.kind is not GuardKind.REPULSION and not self.psi > 0:
            raise ValueError("guard radius must be positive")


class Receiver(enum.Enum):
    TBS = "tBS"
    TUE = "tUE"


class Source(enum.Enum):
    BS = "BS-field"
    UE = "UE-field"


def _is_eta4(eta):
    return eta == 4.0


def unconditioned_exponent(s, psi, ctx: LtContext, general=False):
    """-log of the unconditioned transform (the PPP functional beyond ``psi``)."""
    if s == 0.0 or math.isinf(psi):
        return 0.0
    lam, eta = ctx.lam, ctx.eta
    if psi == 0.0:
        # psi -> 0 limit: pi lam s^delta * pi delta / sin(pi delta)
        d = ctx.delta
        return math.pi * lam * s ** d * math.pi * d / math.sin(math.pi * d)
    if _is_eta4(eta) and not general:
        rs = math.sqrt(s)
        return math.pi * lam * rs * math.atan(rs / (psi * psi))
    x = s * psi ** (-eta)
    # 2 pi lam s / ((eta-2) psi^(eta-2)) == 2 pi lam psi^2 x / (eta-2)
    f = specfun.hyp2f1_interference(-x, ctx.delta)
    return 2.0 * math.pi * lam * psi * psi * x / (eta - 2.0) * f


def lt_unconditioned(s, psi, ctx: LtContext, general=False):
    """Transform of PPP interference with no interferer inside ``psi``.

    ``general=True`` forces the hypergeometric route even when eta == 4.
    """
    if s < 0:
        raise ValueError("s must be non-negative")
    return math.exp(-unconditioned_exponent(s, psi, ctx, general))


def conditioned_log(s, psi, ctx: LtContext, general=False):
    """log of lt_conditioned, accurate when the transform is close to 1."""
    if s == 0.0 or math.isinf(psi):
        return 0.0
    if math.isinf(s) or psi == 0.0:
        return -math.inf
    return -unconditioned_exponent(s, psi, ctx, general) - math.log1p(s * psi ** (-ctx.eta))


def lt_conditioned(s, psi, ctx: LtContext, general=False):
    """As lt_unconditioned, plus one Rayleigh-faded interferer exactly at ``psi``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if s == 0.0 or math.isinf(psi):
        return 1.0
    if math.isinf(s):
        return 0.0
    near = 1.0 / (1.0 + s * psi ** (-ctx.eta)) if psi > 0 else 0.0
    return lt_unconditioned(s, psi, ctx, general) * near


# ---------------------------------------------------------------------------
# repulsive UE field seen from the typical UE

def _repulsion_shape(a, eta):
    # int_0^inf t/(1+t^eta) (1 - exp(-a t)) dt, integrated in x = log t where the
    # knees at t = 1 and t = 1/a become smooth bumps a fixed width apart
    knees = sorted({0.0, -math.log(a)})
    top = knees[-1] + math.log(1e3)      # beyond T = e^top: (1 - e^{-aT}) == 1, t^-eta negligible

    def f(x):
        t = math.exp(x)
        return t * t / (1.0 + t ** eta) * -math.expm1(-a * t)

    edges = [knees[0] - 25.0, *knees, top]
    pieces = [quad.integrate_interval(f, lo, hi, rel_tol=1e-11, abs_tol=1e-300)
              for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    t_top = math.exp(top)
    # t/(1+t^eta) = t^(1-eta) - t^(1-2 eta) + ... summed exactly beyond T
    tail = t_top ** (2.0 - eta) / (eta - 2.0) - t_top ** (2.0 - 2.0 * eta) / (2.0 * eta - 2.0)
    value = sum(q.value for q in pieces) + tail
    err = sum(q.est_error for q in pieces) + t_top ** (2.0 - 3.0 * eta)
    ok = all(q.converged for q in pieces) or err <= 1e-10 * value
    return quad.QuadResult(value, err, sum(q.evaluations for q in pieces), ok).check(
        "repulsion integral")


def repulsion_integral(s, ctx: LtContext) -> quad.QuadResult:
    """int_0^inf s r^(1-eta)/(1+s r^-eta) (1 - exp(-3 sqrt(lam) r)) dr.

    Evaluated after the substitution r = s^(1/eta) t, which turns it into
    s^delta times a function of a = 3 sqrt(lam) s^(1/eta) alone.
    """
    if s == 0.0 or ctx.lam == 0.0:
        return quad.QuadResult(0.0, 0.0, 1)
    scale = s ** (1.0 / ctx.eta)
    r = _repulsion_shape(3.0 * math.sqrt(ctx.lam) * scale, ctx.eta)
    factor = scale * scale
    return quad.QuadResult(r.value * factor, r.est_error * factor, r.evaluations, r.converged)


def _repulsion_exponent_direct(s_scaled, eta):
    # exponent at lam = 1; for any lam it equals this at s * lam^(eta/2)
    return 2.0 * math.pi * repulsion_integral(s_scaled, LtContext(1.0, eta)).value


_TABLE_RANGE = (1e-12, 1e12)


@lru_cache(maxsize=8)
def repulsion_table(eta: float) -> quad.LogGridInterpolant:
    """Exponent of the repulsion transform tabulated against s * lam^(eta/2)."""
    return quad.LogGridInterpolant(
        lambda x: _repulsion_exponent_direct(x, eta), *_TABLE_RANGE, points_per_decade=24)


def lt_repulsion(s, ctx: LtContext, direct=False):
    """Transform of the soft-core UE field at the typical UE.

    The exponent depends on (s, lam) only through s * lam^(eta/2), so a single
    table per eta serves every intensity.  ``direct=True`` skips the table.
    """
    if s < 0:
        raise ValueError("s must be non-negative")
    if s == 0.0 or ctx.lam == 0.0:
        return 1.0
    if math.isinf(s):
        return 0.0
    s_scaled = s * ctx.lam ** (ctx.eta / 2.0)
    if direct:
        return math.exp(-_repulsion_exponent_direct(s_scaled, ctx.eta))
    return math.exp(-repulsion_table(ctx.eta)(s_scaled))


# ---------------------------------------------------------------------------
# radar fading

def cdf_hjr(x, fading: FadingConstants | None = None):
    """Generalized-exponential approximation to the CDF of h1^2."""
    fc = fading or fading_constants()
    if x <= 0:
        return 0.0
    return (-math.expm1(-fc.eps_r * x)) ** fc.m_r


def cdf_hjr_exact(x):
    """CDF of h1^2 for h1 ~ Exp(1)."""
    if x <= 0:
        return 0.0
    return -math.expm1(-math.sqrt(x))


def lt_h1_squared(s):
    """E[exp(-s h1^2)] = sqrt(pi) exp(1/(4s)) erfc(1/(2 sqrt s)) / (2 sqrt s)."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if s == 0.0:
        return 1.0
    if math.isinf(s):
        return 0.0
    rs = math.sqrt(s)
    return math.sqrt(math.pi) * specfun.erfcx(0.5 / rs) / (2.0 * rs)


# ---------------------------------------------------------------------------

def lt_for_receiver(receiver, source, s, distance, ctx: LtContext, intercell=True):
    """Dispatch one cell of the receiver/interferer table.

    ``distance`` is rho for the typical BS and R0 for the typical UE; it is
    ignored for the repulsive UE field.
    """
    receiver, source = Receiver(receiver), Source(source)
    if not intercell:
        return 1.0
    if receiver is Receiver.TBS:
        if source is Source.BS:
            return lt_conditioned(s, distance, ctx)
        return lt_unconditioned(s, distance / 2.0, ctx)
    if source is Source.BS:
        return lt_unconditioned(s, distance, ctx)
    return lt_repulsion(s, ctx)
