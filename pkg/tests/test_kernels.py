import numpy as np
import pytest
from scipy import stats
from scipy.spatial import cKDTree

from fdisac.netsim import kernels
from fdisac.netsim._accel import HAVE_NUMBA

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    monkeypatch.setenv("FDISAC_DISABLE_NUMBA", "1" if request.param == "numpy" else "0")
    return request.param


def _area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _sites(seed, n=150, half=10.0):
    rng = np.random.default_rng(seed)
    return np.vstack(([0.0, 0.0], rng.uniform(-0.8 * half, 0.8 * half, size=(n, 2))))


def test_cells_tile_the_box(backend):
    half = 10.0
    sites = _sites(1, half=half)
    areas = [_area(kernels.cell_polygon(sites, i, half)) for i in range(len(sites))]
    assert min(areas) > 0  # counter-clockwise, non-degenerate
    assert sum(areas) == pytest.approx((2 * half) ** 2, rel=1e-10)


def test_cell_membership_by_nearest_neighbour(backend):
    half = 10.0
    sites = _sites(2, half=half)
    tree = cKDTree(sites)
    probes = np.random.default_rng(3).uniform(-half, half, size=(4000, 2))
    owner = tree.query(probes)[1]
    for i in range(0, len(sites), 7):
        poly = kernels.cell_polygon(sites, i, half)
        # convex CCW polygon: inside iff left of every edge
        e = np.roll(poly, -1, axis=0) - poly
        rel = probes[:, None, :] - poly[None, :, :]
        inside = np.all(e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0] >= -1e-9, axis=1)
        clear = np.abs(np.sort(tree.query(probes, k=2)[0], axis=1) @ [1, -1]) > 1e-6
        assert np.array_equal(inside[clear], (owner == i)[clear])


def test_samples_land_in_own_cell(backend):
    half = 10.0
    sites = _sites(4, half=half)
    u = np.random.default_rng(5).random((len(sites), 3))
    pts = kernels.sample_in_cells(sites, half, u)
    assert pts.shape == sites.shape
    assert np.array_equal(cKDTree(sites).query(pts)[1], np.arange(len(sites)))


def test_samples_uniform_in_square_cell(backend):
    # a 3x3 lattice of sites in [-3,3]^2 makes the centre cell the unit square [-1,1]^2
    g = np.array([-2.0, 0.0, 2.0])
    lattice = np.array([[x, y] for x in g for y in g])
    centre = int(np.nonzero((lattice == 0).all(axis=1))[0][0])
    sites = np.vstack((lattice[centre], np.delete(lattice, centre, axis=0)))
    rng = np.random.default_rng(6)
    pts = np.array([kernels.sample_in_cells(sites, 3.0, rng.random((9, 3)))[0] for _ in range(3000)])
    assert np.all(np.abs(pts) <= 1 + 1e-12)
    for col in (0, 1):
        assert stats.kstest((pts[:, col] + 1) / 2, "uniform").pvalue > 0.01


def test_faded_sum(backend):
    rng = np.random.default_rng(8)
    pts = rng.uniform(-100, 100, size=(50, 2))
    g = rng.exponential(size=50)
    rx = (3.0, -4.0)
    direct = sum(gk * np.hypot(p[0] - rx[0], p[1] - rx[1]) ** -4.0 for p, gk in zip(pts, g))
    assert kernels.faded_sum(pts, rx, g, 4.0) == pytest.approx(direct, rel=1e-12)
    assert kernels.faded_sum(np.empty((0, 2)), rx, np.empty(0), 4.0) == 0.0


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_backends_agree_bitwise(monkeypatch):
    sites = _sites(9, n=140, half=25.0)
    u = np.random.default_rng(10).random((len(sites), 3))
    monkeypatch.setenv("FDISAC_DISABLE_NUMBA", "0")
    a = kernels.sample_in_cells(sites, 25.0, u)
    pa = kernels.cell_polygon(sites, 17, 25.0)
    monkeypatch.setenv("FDISAC_DISABLE_NUMBA", "1")
    b = kernels.sample_in_cells(sites, 25.0, u)
    pb = kernels.cell_polygon(sites, 17, 25.0)
    assert np.array_equal(a, b)
    assert np.array_equal(pa, pb)


def test_neighbor_table_is_symmetric_and_sorted():
    sites = _sites(11, n=80)
    nbrs = kernels.voronoi_neighbors(sites)
    for i, row in enumerate(nbrs):
        row = row[row >= 0]
        d = ((sites[row] - sites[i]) ** 2).sum(axis=1)
        assert np.all(np.diff(d) >= 0)
        for j in row:
            assert i in nbrs[j]


@pytest.mark.parametrize("sites", [
    np.array([[0.0, 0.0]]),
    np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 1.0]]),
    np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [-1.0, -1.0]]),  # collinear
])
def test_degenerate_site_sets(backend, sites):
    half = 10.0
    areas = [_area(kernels.cell_polygon(sites, i, half)) for i in range(len(sites))]
    assert sum(areas) == pytest.approx((2 * half) ** 2, rel=1e-12)
    pts = kernels.sample_in_cells(sites, half, np.full((len(sites), 3), 0.3))
    assert np.array_equal(cKDTree(sites).query(pts)[1], np.arange(len(sites)))


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_faded_sum_backends_bitwise(monkeypatch):
    rng = np.random.default_rng(12)
    pts = rng.uniform(-1e3, 1e3, size=(300, 2))
    g = rng.exponential(size=300)
    res = {}
    for flag in ("0", "1"):
        monkeypatch.setenv("FDISAC_DISABLE_NUMBA", flag)
        res[flag] = [kernels.faded_sum(pts, (5.0, -2.0), g, eta) for eta in (4.0, 6.0)]
    assert res["0"] == res["1"]
