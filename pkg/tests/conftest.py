import math

import numpy as np
import pytest

from fdisac import netsim
from fdisac.params import NetworkParams, default_scenario


@pytest.fixture(scope="session")
def params():
    return NetworkParams()


@pytest.fixture(scope="session")
def v(params):
    return params.v


@pytest.fixture
def sweep_sc(v):
    return default_scenario(zeta=1e-12, r1=5 * v)


@pytest.fixture(scope="session")
def small_batch(params):
    return netsim.simulate_batch(params, 1500, seed=7)


def sample_ppp_interference(rng, lam, eta, n_draws, r_in, r_out, keep=None):
    """Unit-power Rayleigh interference at the origin from a PPP on the annulus [r_in, r_out].

    ``keep(r)`` is an optional retention probability (independent thinning).
    Returns one interference value per draw.
    """
    area = math.pi * (r_out ** 2 - r_in ** 2)
    counts = rng.poisson(lam * area, size=n_draws)
    total = int(counts.sum())
    r = np.sqrt(r_in ** 2 + rng.random(total) * (r_out ** 2 - r_in ** 2))
    g = rng.exponential(size=total)
    if keep is not None:
        g = g * (rng.random(total) < keep(r))
    owner = np.repeat(np.arange(n_draws), counts)
    return np.bincount(owner, weights=g * r ** (-eta), minlength=n_draws)


def eta4_tail_factor(s, lam, r_out):
    # exact transform of the homogeneous eta=4 field beyond r_out
    rs = math.sqrt(s)
    return math.exp(-math.pi * lam * rs * (math.pi / 2 - math.atan(r_out ** 2 / rs)))


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion:2d}: {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
