"""Network constants, evaluation scenarios and the flat key/value config format."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

from . import specfun


class ParamError(ValueError):
    """Raised when a parameter set or config file violates a constraint."""


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class NetworkParams:
    """Static network constants, all in linear units.

    ``lam`` is the BS intensity (the Python keyword ``lambda`` is reserved; the
    config file still uses ``lambda``).
    """

    lam: float = 1e-5
    eta: float = 4.0
    p_b: float = 1.0
    p_u: float = 0.2
    zeta: float = 1e-12
    sigma2: float = 0.0

    @property
    def delta(self) -> float:
        return 2.0 / self.eta

    @property
    def v(self) -> float:
        """Distance unit used to quote target ranges, 1/(60 sqrt(lambda))."""
        return 1.0 / (60.0 * math.sqrt(self.lam))

    def replace(self, **changes) -> "NetworkParams":
        return replace(self, **changes)


def validate(params: NetworkParams) -> None:
    """Raise ParamError naming the first violated constraint."""
    checks = (
        (params.lam > 0, "lambda must be positive"),
        (params.eta > 2, "eta must exceed 2"),
        (params.p_b > 0, "p_b must be positive"),
        (params.p_u > 0, "p_u must be positive"),
        (params.zeta >= 0, "zeta must be non-negative"),
        (params.sigma2 >= 0, "sigma2 must be non-negative"),
    )
    for ok, message in checks:
        # NaN fails every comparison, so it lands here too
        if not ok:
            raise ParamError(message)


@dataclass(frozen=True)
class Scenario:
    params: NetworkParams = field(default_factory=NetworkParams)
    r1: float = 0.0
    theta_b: float = 1.0
    theta_u: float = 1.0
    intercell: bool = True

    def __post_init__(self):
        validate(self.params)
        if not self.r1 > 0:
            raise ParamError("r1 must be positive")
        if not self.theta_b > 0:
            raise ParamError("theta_b must be positive")
        if not self.theta_u > 0:
            raise ParamError("theta_u must be positive")

    def replace(self, **changes) -> "Scenario":
        """Copy with fields changed; NetworkParams fields are accepted too."""
        pchanges = {k: changes.pop(k) for k in list(changes) if k in _PARAM_FIELDS}
        params = replace(self.params, **pchanges) if pchanges else self.params
        return replace(self, params=params, **changes)


_PARAM_FIELDS = {"lam", "eta", "p_b", "p_u", "zeta", "sigma2"}


@dataclass(frozen=True)
class FadingConstants:
    """Constants of the generalized-exponential fit to the radar fading h1^2."""

    m_r: float
    eps_r: float
    b: float = 13.0 / 10.0


@lru_cache(maxsize=1)
def fading_constants() -> FadingConstants:
    m_r = math.sqrt(3.0 / 20.0)
    return FadingConstants(m_r=m_r, eps_r=specfun.harmonic_generalized(m_r) / 2.0)


def default_scenario(**overrides) -> Scenario:
    """Network defaults with R1 = 5v and 0 dB thresholds, then ``overrides``."""
    base = Scenario(params=NetworkParams(), r1=5 * NetworkParams().v)
    return base.replace(**overrides) if overrides else base


# ---------------------------------------------------------------------------
# config file

CONFIG_KEYS = (
    "lambda", "eta", "p_b", "p_u", "zeta", "sigma2",
    "r1", "theta_b_db", "theta_u_db", "intercell",
)


def _parse_bool(key, text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ParamError(f"{key}: expected true/false, got {text!r}")


def _parse_float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ParamError(f"{key}: not a number: {text!r}") from None


def parse_distance(text: str, v: float) -> float:
    """Parse a length; a trailing ``v`` multiplies by the distance unit (``7v``)."""
    t = text.strip()
    if t.endswith("v"):
        body = t[:-1].strip()
        return (_parse_float("r1", body) if body else 1.0) * v
    return _parse_float("r1", t)


def parse_config(text: str, base: Scenario | None = None) -> Scenario:
    """Parse ``key = value`` lines (``#`` comments) on top of ``base``.

    Thresholds are given in dB, everything else linear.  Unknown or repeated
    keys are errors.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = line.split("=", 1)
        elif ":" in line:
            key, value = line.split(":", 1)
        else:
            raise ParamError(f"line {lineno}: expected 'key = value'")
        key = key.strip().lower()
        if key not in CONFIG_KEYS:
            raise ParamError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ParamError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()

    base = base or default_scenario()
    p = base.params
    pvals = {
        "lam": _parse_float("lambda", raw["lambda"]) if "lambda" in raw else p.lam,
        "eta": _parse_float("eta", raw["eta"]) if "eta" in raw else p.eta,
        "p_b": _parse_float("p_b", raw["p_b"]) if "p_b" in raw else p.p_b,
        "p_u": _parse_float("p_u", raw["p_u"]) if "p_u" in raw else p.p_u,
        "zeta": _parse_float("zeta", raw["zeta"]) if "zeta" in raw else p.zeta,
        "sigma2": _parse_float("sigma2", raw["sigma2"]) if "sigma2" in raw else p.sigma2,
    }
    params = NetworkParams(**pvals)
    validate(params)
    r1 = parse_distance(raw["r1"], params.v) if "r1" in raw else base.r1
    theta_b = db_to_linear(_parse_float("theta_b_db", raw["theta_b_db"])) if "theta_b_db" in raw else base.theta_b
    theta_u = db_to_linear(_parse_float("theta_u_db", raw["theta_u_db"])) if "theta_u_db" in raw else base.theta_u
    intercell = _parse_bool("intercell", raw["intercell"]) if "intercell" in raw else base.intercell
    return Scenario(params=params, r1=r1, theta_b=theta_b, theta_u=theta_u, intercell=intercell)


def load_config(path, base: Scenario | None = None) -> Scenario:
    return parse_config(Path(path).read_text(), base)


def format_config(scenario: Scenario) -> str:
    p = scenario.params
    return "\n".join([
        f"lambda = {p.lam!r}",
        f"eta = {p.eta!r}",
        f"p_b = {p.p_b!r}",
        f"p_u = {p.p_u!r}",
        f"zeta = {p.zeta!r}",
        f"sigma2 = {p.sigma2!r}",
        f"r1 = {scenario.r1!r}",
        f"theta_b_db = {linear_to_db(scenario.theta_b)!r}",
        f"theta_u_db = {linear_to_db(scenario.theta_u)!r}",
        f"intercell = {'true' if scenario.intercell else 'false'}",
    ]) + "\n"
