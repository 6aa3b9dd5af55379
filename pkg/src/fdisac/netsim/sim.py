"""Monte-Carlo simulation of the full-duplex ISAC network around a typical cell.

Each realization places a PPP of interfering BSs in a disk around the BS at
the origin, drops one UE uniformly in every Voronoi cell (including the
typical UE in the origin cell) and draws Rayleigh fading for every link in
use.  Only unit-power interference sums and the typical-cell geometry are
kept; SINRs for any powers, thresholds, target range or RSI level are formed
from those afterwards, so one batch serves a whole sweep.

Randomness is keyed by (seed, realization index, ring): the disk is split
into concentric rings of fixed width, each with its own Philox stream.
Results therefore do not depend on the number of workers, and enlarging the
window leaves the inner rings' points and fading untouched.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..params import NetworkParams, Scenario
from . import kernels
from ._accel import backend_name

WORKERS_ENV = "FDISAC_WORKERS"
DEFAULT_SEED = 20240607
DEFAULT_REPS = 10_000

EVENTS = ("decode_ue", "decode_bs_1st", "detect_bs_2nd_joint", "detect_bs_1st",
          "decode_bs_2nd_joint", "detect_bs_2nd_given", "decode_bs_2nd_given")

SAMPLE_COLUMNS = ("r0", "rho", "sinr_ue", "sinr_bs_decode1", "sinr_bs_detect2",
                  "sinr_bs_detect1", "sinr_bs_decode2",
                  "decode1_then_detect2", "detect1_then_decode2")


@dataclass(frozen=True)
class GeometryConfig:
    """Window sizes in units of 1/sqrt(pi lam), the mean nearest-BS distance scale.

    BSs fill a disk of radius ``window + guard``; all of them interfere.  The
    guard ring only exists so that cells near the window edge are well formed.
    Cells are clipped to a square of side ``4 * window``.
    """

    window: float = 10.0
    guard: float = 2.0
    ring_width: float = 2.0

    def scale(self, lam) -> float:
        return 1.0 / math.sqrt(math.pi * lam)

    def ring_edges(self, lam) -> np.ndarray:
        outer = self.window + self.guard
        if outer <= 0:
            return np.zeros(1)
        n = max(int(math.ceil(outer / self.ring_width - 1e-9)), 1)
        edges = np.minimum(np.arange(n + 1) * self.ring_width, outer)
        return edges * self.scale(lam)

    def half_box(self, lam) -> float:
        return 2.0 * max(self.window, 1.0) * self.scale(lam)

    def doubled(self) -> "GeometryConfig":
        return GeometryConfig(2.0 * self.window, self.guard, self.ring_width)


@dataclass
class NetworkRealization:
    bs_points: np.ndarray          # interfering BSs; the origin BS is not included
    ue_points: np.ndarray          # one UE per interfering BS, same order
    tue: np.ndarray
    rho: float
    r0: float
    fading: dict = field(default_factory=dict)


@dataclass
class RealizationBatch:
    """Per-realization sufficient statistics at unit transmit power."""

    lam: float
    eta: float
    r0: np.ndarray
    rho: np.ndarray
    h0: np.ndarray
    h1: np.ndarray
    i_bs_tue: np.ndarray
    i_ue_tue: np.ndarray
    i_bs_tbs: np.ndarray
    i_ue_tbs: np.ndarray
    n_bs: np.ndarray

    def __len__(self):
        return len(self.r0)


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n: int

    @classmethod
    def from_hits(cls, hits) -> "McEstimate":
        n = len(hits)
        p = float(np.count_nonzero(hits)) / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n)


@dataclass
class SinrSample:
    """SINRs of a batch (arrays) or a single realization (scalars)."""

    sinr_ue: np.ndarray
    sinr_bs_decode1: np.ndarray
    sinr_bs_detect2: np.ndarray
    sinr_bs_detect1: np.ndarray
    sinr_bs_decode2: np.ndarray
    decode1_then_detect2: np.ndarray
    detect1_then_decode2: np.ndarray


def _stream(seed, index, ring):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index, ring])))


def generate_realization(params: NetworkParams, geometry: GeometryConfig, seed: int, index: int) -> NetworkRealization:
    """Draw realization ``index`` of the stream keyed by ``seed``."""
    lam = params.lam
    edges = geometry.ring_edges(lam)
    core = _stream(seed, index, 0)
    tue_u = core.random(3)
    h0 = core.exponential()
    h1 = core.exponential()

    pts, parts = [], {"g_bs_tue": [], "g_bs_tbs": [], "g_ue_tue": [], "g_ue_tbs": [], "cell_u": []}
    for k in range(len(edges) - 1):
        rng = _stream(seed, index, k + 1)
        a2, b2 = edges[k] ** 2, edges[k + 1] ** 2
        n = rng.poisson(lam * math.pi * (b2 - a2))
        rad = np.sqrt(a2 + rng.random(n) * (b2 - a2))
        ang = 2.0 * math.pi * rng.random(n)
        pts.append(np.column_stack((rad * np.cos(ang), rad * np.sin(ang))))
        for key in ("g_bs_tue", "g_bs_tbs", "g_ue_tue", "g_ue_tbs"):
            parts[key].append(rng.exponential(size=n))
        parts["cell_u"].append(rng.random((n, 3)))

    bs = np.concatenate(pts) if pts else np.empty((0, 2))
    cat = {k: (np.concatenate(v) if v else np.empty((0,) if k != "cell_u" else (0, 3))) for k, v in parts.items()}
    sites = np.vstack((np.zeros((1, 2)), bs))
    uniforms = np.vstack((tue_u[None, :], cat["cell_u"]))
    ues = kernels.sample_in_cells(sites, geometry.half_box(lam), uniforms)
    tue = ues[0]
    rho = float(np.sqrt((bs ** 2).sum(axis=1)).min()) if len(bs) else math.inf
    fading = {"h0": h0, "h1": h1}
    fading.update({k: v for k, v in cat.items() if k != "cell_u"})
    return NetworkRealization(bs, ues[1:], tue, rho, float(np.hypot(*tue)), fading)


def realization_stats(real: NetworkRealization, eta: float) -> tuple:
    f = real.fading
    origin = (0.0, 0.0)
    return (real.r0, real.rho, f["h0"], f["h1"],
            kernels.faded_sum(real.bs_points, real.tue, f["g_bs_tue"], eta),
            kernels.faded_sum(real.ue_points, real.tue, f["g_ue_tue"], eta),
            kernels.faded_sum(real.bs_points, origin, f["g_bs_tbs"], eta),
            kernels.faded_sum(real.ue_points, origin, f["g_ue_tbs"], eta),
            len(real.bs_points))


def _simulate_range(args):
    lam, eta, geometry, seed, start, stop = args
    params = NetworkParams(lam=lam, eta=eta)
    rows = [realization_stats(generate_realization(params, geometry, seed, i), eta)
            for i in range(start, stop)]
    return np.array(rows, dtype=np.float64).reshape(-1, 9)


def worker_count(workers=None) -> int:
    if workers is not None:
        return max(int(workers), 1)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(int(env), 1)
    return 1


def simulate_batch(params: NetworkParams, n_reps: int, seed: int = DEFAULT_SEED,
                   geometry: GeometryConfig = GeometryConfig(), workers=None) -> RealizationBatch:
    """Realizations 0 .. n_reps-1; output is independent of ``workers``."""
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    workers = worker_count(workers)
    chunk = max(1, min(500, -(-n_reps // workers)))
    jobs = [(params.lam, params.eta, geometry, seed, s, min(s + chunk, n_reps))
            for s in range(0, n_reps, chunk)]
    if workers == 1 or len(jobs) == 1:
        parts = [_simulate_range(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_range, jobs))  # map preserves job order
    a = np.concatenate(parts)
    return RealizationBatch(params.lam, params.eta, a[:, 0], a[:, 1], a[:, 2], a[:, 3],
                            a[:, 4], a[:, 5], a[:, 6], a[:, 7], a[:, 8].astype(np.int64))


@lru_cache(maxsize=8)
def _cached_batch(lam, eta, n_reps, seed, geometry, backend):
    return simulate_batch(NetworkParams(lam=lam, eta=eta), n_reps, seed, geometry)


def cached_batch(params: NetworkParams, n_reps: int, seed: int = DEFAULT_SEED,
                 geometry: GeometryConfig = GeometryConfig()) -> RealizationBatch:
    """simulate_batch memoized on everything the geometry depends on."""
    return _cached_batch(params.lam, params.eta, n_reps, seed, geometry, backend_name())


def sample_sinrs(batch, sc: Scenario) -> SinrSample:
    """SINRs for every realization in ``batch`` under scenario ``sc``.

    ``batch`` may also be a single NetworkRealization.
    """
    if isinstance(batch, NetworkRealization):
        st = realization_stats(batch, sc.params.eta)
        batch = RealizationBatch(sc.params.lam, sc.params.eta,
                                 *[np.array([x], dtype=float) for x in st[:8]], np.array([st[8]]))
    p = sc.params
    if batch.eta != p.eta:
        raise ValueError("batch was generated for a different path-loss exponent")
    eta = p.eta
    on = 1.0 if sc.intercell else 0.0
    with np.errstate(divide="ignore"):
        link = batch.h0 * batch.r0 ** (-eta)
        echo = p.p_b * batch.h1 ** 2 * sc.r1 ** (-2.0 * eta)
        at_ue = on * (p.p_b * batch.i_bs_tue + p.p_u * batch.i_ue_tue) + p.p_u * p.zeta + p.sigma2
        at_bs = on * (p.p_b * batch.i_bs_tbs + p.p_u * batch.i_ue_tbs) + p.p_b * p.zeta + p.sigma2
        up = p.p_u * link
        sinr_ue = p.p_b * link / at_ue
        decode1 = up / (echo + at_bs)
        detect2 = echo / at_bs
        detect1 = echo / (up + at_bs)
        decode2 = up / at_bs
    return SinrSample(sinr_ue, decode1, detect2, detect1, decode2,
                      (decode1 > sc.theta_u) & (detect2 > sc.theta_b),
                      (detect1 > sc.theta_b) & (decode2 > sc.theta_u))


def event_indicators(batch, sc: Scenario) -> dict:
    s = sample_sinrs(batch, sc)
    return {
        "decode_ue": s.sinr_ue > sc.theta_b,
        "decode_bs_1st": s.sinr_bs_decode1 > sc.theta_u,
        "detect_bs_2nd_joint": s.decode1_then_detect2,
        "detect_bs_1st": s.sinr_bs_detect1 > sc.theta_b,
        "decode_bs_2nd_joint": s.detect1_then_decode2,
        "detect_bs_2nd_given": s.sinr_bs_detect2 > sc.theta_b,
        "decode_bs_2nd_given": s.sinr_bs_decode2 > sc.theta_u,
    }


def estimate_from_batch(batch: RealizationBatch, sc: Scenario) -> dict[str, McEstimate]:
    return {k: McEstimate.from_hits(v) for k, v in event_indicators(batch, sc).items()}


def estimate(sc: Scenario, n_reps: int = DEFAULT_REPS, seed: int = DEFAULT_SEED,
             geometry: GeometryConfig = GeometryConfig(), workers=None) -> dict[str, McEstimate]:
    """Monte-Carlo estimates of every event in EVENTS."""
    if workers is None:
        batch = cached_batch(sc.params, n_reps, seed, geometry)
    else:
        batch = simulate_batch(sc.params, n_reps, seed, geometry, workers)
    return estimate_from_batch(batch, sc)


def write_samples(path, batch: RealizationBatch, sc: Scenario) -> int:
    """Raw per-realization dump, columns as in SAMPLE_COLUMNS; returns the row count."""
    s = sample_sinrs(batch, sc)
    cols = [batch.r0, batch.rho, s.sinr_ue, s.sinr_bs_decode1, s.sinr_bs_detect2,
            s.sinr_bs_detect1, s.sinr_bs_decode2,
            s.decode1_then_detect2.astype(int), s.detect1_then_decode2.astype(int)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SAMPLE_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(x)) if i < 7 else str(int(x)) for i, x in enumerate(row)) + "\n")
    return len(batch)
