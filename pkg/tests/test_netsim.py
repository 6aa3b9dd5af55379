import math

import numpy as np
import pytest
from scipy import stats

from fdisac import netsim
from fdisac.netsim import GeometryConfig, NetworkRealization
from fdisac.params import NetworkParams, default_scenario


def test_geometry_config(params):
    g = GeometryConfig()
    scale = 1 / math.sqrt(math.pi * params.lam)
    edges = g.ring_edges(params.lam)
    assert edges[0] == 0 and edges[-1] == pytest.approx(12 * scale)
    assert np.all(np.diff(edges) > 0)
    assert g.half_box(params.lam) == pytest.approx(20 * scale)
    d = g.doubled()
    assert d.window == 20 and np.allclose(d.ring_edges(params.lam)[:len(edges) - 1], edges[:-1])


def test_realization_geometry(params):
    g = GeometryConfig()
    real = netsim.generate_realization(params, g, seed=3, index=0)
    r = np.hypot(real.bs_points[:, 0], real.bs_points[:, 1])
    assert r.max() <= g.ring_edges(params.lam)[-1]
    assert real.rho == pytest.approx(r.min())
    assert len(real.ue_points) == len(real.bs_points)
    # each UE (typical one included) lies in its own BS's cell
    sites = np.vstack(([0.0, 0.0], real.bs_points))
    ues = np.vstack((real.tue, real.ue_points))
    d = ((ues[:, None, :] - sites[None, :, :]) ** 2).sum(axis=2)
    assert np.array_equal(d.argmin(axis=1), np.arange(len(sites)))
    assert real.r0 == pytest.approx(np.hypot(*real.tue))


def test_expected_bs_count(params):
    counts = [len(netsim.generate_realization(params, GeometryConfig(), 1, i).bs_points) for i in range(300)]
    expected = 144.0  # lam * pi * (12 / sqrt(pi lam))^2
    assert abs(np.mean(counts) - expected) < 4 * math.sqrt(expected / 300)


def test_hand_built_sinrs():
    p = NetworkParams(lam=1e-5, eta=4.0, p_b=2.0, p_u=0.5, zeta=1e-6, sigma2=1e-9)
    sc = default_scenario(r1=30.0, theta_b=0.1, theta_u=0.2).replace(**p.__dict__)
    real = NetworkRealization(
        bs_points=np.array([[100.0, 0.0]]), ue_points=np.array([[0.0, 60.0]]),
        tue=np.array([10.0, 0.0]), rho=100.0, r0=10.0,
        fading={"h0": 0.8, "h1": 1.5, "g_bs_tue": np.array([1.2]), "g_bs_tbs": np.array([0.7]),
                "g_ue_tue": np.array([0.3]), "g_ue_tbs": np.array([2.0])})
    # by hand
    i_bs_tue = 1.2 * 90.0 ** -4
    i_ue_tue = 0.3 * (10.0 ** 2 + 60.0 ** 2) ** -2
    i_bs_tbs = 0.7 * 100.0 ** -4
    i_ue_tbs = 2.0 * 60.0 ** -4
    sig = 0.8 * 10.0 ** -4
    echo = 2.0 * 1.5 ** 2 * 30.0 ** -8
    at_bs = 2.0 * i_bs_tbs + 0.5 * i_ue_tbs + 2.0 * 1e-6 + 1e-9
    at_ue = 2.0 * i_bs_tue + 0.5 * i_ue_tue + 0.5 * 1e-6 + 1e-9
    s = netsim.sample_sinrs(real, sc)
    assert s.sinr_ue[0] == pytest.approx(2.0 * sig / at_ue, rel=1e-12)
    assert s.sinr_bs_decode1[0] == pytest.approx(0.5 * sig / (echo + at_bs), rel=1e-12)
    assert s.sinr_bs_detect2[0] == pytest.approx(echo / at_bs, rel=1e-12)
    assert s.sinr_bs_detect1[0] == pytest.approx(echo / (0.5 * sig + at_bs), rel=1e-12)
    assert s.sinr_bs_decode2[0] == pytest.approx(0.5 * sig / at_bs, rel=1e-12)
    # intercell switch drops only the field terms
    off = netsim.sample_sinrs(real, sc.replace(intercell=False))
    assert off.sinr_bs_decode2[0] == pytest.approx(0.5 * sig / (2.0 * 1e-6 + 1e-9), rel=1e-12)


def test_second_stage_never_worse(small_batch, sweep_sc):
    s = netsim.sample_sinrs(small_batch, sweep_sc)
    assert np.all(s.sinr_bs_detect2 >= s.sinr_bs_detect1)
    assert np.all(s.sinr_bs_decode2 >= s.sinr_bs_decode1)


def test_joint_not_above_marginal(small_batch, sweep_sc):
    for db in (-40, -20, 0):
        sc = sweep_sc.replace(theta_b=10 ** (db / 10), theta_u=10 ** (db / 10))
        est = netsim.estimate_from_batch(small_batch, sc)
        assert est["detect_bs_2nd_joint"].value <= est["decode_bs_1st"].value
        assert est["decode_bs_2nd_joint"].value <= est["detect_bs_1st"].value
        assert est["detect_bs_2nd_joint"].value <= est["detect_bs_2nd_given"].value


def test_vanishing_threshold_always_succeeds(small_batch, sweep_sc):
    est = netsim.estimate_from_batch(small_batch, sweep_sc.replace(theta_b=1e-60, theta_u=1e-60))
    for name, e in est.items():
        assert e.value == 1.0, name


def test_mc_estimate():
    e = netsim.McEstimate.from_hits(np.array([1, 0, 1, 1], dtype=bool))
    assert e.value == 0.75 and e.n == 4
    assert e.stderr == pytest.approx(math.sqrt(0.75 * 0.25 / 4))


def test_seed_reproducible_and_worker_independent(params):
    a = netsim.simulate_batch(params, 60, seed=42, workers=1)
    b = netsim.simulate_batch(params, 60, seed=42, workers=3)
    c = netsim.simulate_batch(params, 60, seed=43, workers=1)
    for f in ("r0", "rho", "h0", "h1", "i_bs_tue", "i_ue_tue", "i_bs_tbs", "i_ue_tbs", "n_bs"):
        assert np.array_equal(getattr(a, f), getattr(b, f)), f
    assert not np.array_equal(a.r0, c.r0)


def test_prefix_stability(params):
    # realization i does not depend on how many realizations are requested
    a = netsim.simulate_batch(params, 10, seed=5)
    b = netsim.simulate_batch(params, 25, seed=5)
    assert np.array_equal(a.i_bs_tbs, b.i_bs_tbs[:10])


def test_worker_env(monkeypatch):
    monkeypatch.setenv(netsim.sim.WORKERS_ENV, "3")
    assert netsim.worker_count() == 3
    assert netsim.worker_count(2) == 2
    monkeypatch.delenv(netsim.sim.WORKERS_ENV)
    assert netsim.worker_count() == 1


def test_window_doubling_keeps_inner_points(params):
    g = GeometryConfig()
    a = netsim.generate_realization(params, g, 9, 4)
    b = netsim.generate_realization(params, g.doubled(), 9, 4)
    inner = g.window * g.scale(params.lam)
    ra = np.hypot(*a.bs_points.T)
    rb = np.hypot(*b.bs_points.T)
    assert np.array_equal(np.sort(ra[ra < inner]), np.sort(rb[rb < inner]))
    assert a.rho == b.rho


def test_rho_distribution(small_batch, params):
    assert stats.kstest(small_batch.rho, lambda x: -np.expm1(-math.pi * params.lam * x * x)).pvalue > 0.01


def test_eta_mismatch(small_batch, sweep_sc):
    with pytest.raises(ValueError, match="path-loss"):
        netsim.sample_sinrs(small_batch, sweep_sc.replace(eta=3.0))


def test_bad_reps(params):
    with pytest.raises(ValueError):
        netsim.simulate_batch(params, 0)


def test_write_samples(tmp_path, small_batch, sweep_sc):
    path = tmp_path / "s.csv"
    n = netsim.write_samples(path, small_batch, sweep_sc)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(netsim.SAMPLE_COLUMNS)
    assert len(lines) == n + 1 == len(small_batch) + 1
    first = lines[1].split(",")
    assert float(first[0]) == small_batch.r0[0]
    assert first[-1] in ("0", "1")


def test_backends_give_identical_batches(params, monkeypatch):
    from fdisac.netsim._accel import HAVE_NUMBA
    if not HAVE_NUMBA:
        pytest.skip("numba not installed")
    out = {}
    for flag in ("0", "1"):
        monkeypatch.setenv("FDISAC_DISABLE_NUMBA", flag)
        out[flag] = netsim.simulate_batch(params, 20, seed=77)
    for f in ("r0", "rho", "i_bs_tue", "i_ue_tue", "i_bs_tbs", "i_ue_tbs"):
        assert np.array_equal(getattr(out["0"], f), getattr(out["1"], f)), f
