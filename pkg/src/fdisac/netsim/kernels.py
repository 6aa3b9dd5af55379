"""Hot loops of the simulator: uniform sampling inside Voronoi cells and faded
interference sums.

Each kernel exists twice, a numba version written as explicit loops and a
vectorized numpy version.  Both consume the same pre-drawn uniforms and run
the same floating-point recipe in the same order, so their outputs are
bitwise equal (for odd or fractional eta the path-loss power goes through
``pow``, whose numpy and libm versions can differ in the last bit).  ``sample_in_cells`` and ``faded_sum`` dispatch on the
FDISAC_DISABLE_NUMBA flag.

A cell is the box clipped by the bisectors of its Delaunay neighbours
(nearest first); other sites cannot contribute an edge.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay, QhullError

from ._accel import njit, numba_enabled

MAX_VERTICES = 96


def box_polygon(half):
    """Counter-clockwise square [-half, half]^2."""
    return np.array([[-half, -half], [half, -half], [half, half], [-half, half]], dtype=np.float64)


def voronoi_neighbors(sites) -> np.ndarray:
    """Neighbour table of shape (n, k): row i lists the Delaunay neighbours of
    site i sorted by distance, padded with -1.

    Falls back to "every other site" when the triangulation is degenerate
    (fewer than 4 sites, or all of them collinear).
    """
    sites = np.asarray(sites, dtype=np.float64)
    n = len(sites)
    table = None
    if n >= 4:
        try:
            indptr, indices = Delaunay(sites).vertex_neighbor_vertices
        except QhullError:
            pass
        else:
            deg = np.diff(indptr)
            table = np.full((n, max(int(deg.max()), 1)), -1, dtype=np.int64)
            rows = np.repeat(np.arange(n), deg)
            cols = np.arange(len(indices)) - np.repeat(indptr[:-1], deg)
            table[rows, cols] = indices
    if table is None:
        others = np.array([[j for j in range(n) if j != i] for i in range(n)], dtype=np.int64)
        table = others.reshape(n, max(n - 1, 0)) if n > 1 else np.full((n, 1), -1, dtype=np.int64)
    safe = np.where(table >= 0, table, 0)
    d = ((sites[safe] - sites[:, None, :]) ** 2).sum(axis=2)
    d = np.where(table >= 0, d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")
    return np.ascontiguousarray(np.take_along_axis(table, order, axis=1))


# ---------------------------------------------------------------------------
# numba

@njit(cache=True)
def _clip_nb(px, py, n, sx, sy, qx, qy, outx, outy):
    # keep the side of the bisector of (s, q) that contains s
    nx = qx - sx
    ny = qy - sy
    half = 0.5 * (nx * nx + ny * ny)
    m = 0
    for j in range(n):
        k = j + 1 if j + 1 < n else 0
        dc = (px[j] - sx) * nx + (py[j] - sy) * ny - half
        dn = (px[k] - sx) * nx + (py[k] - sy) * ny - half
        inc = dc <= 0.0
        if inc:
            outx[m] = px[j]
            outy[m] = py[j]
            m += 1
        if inc != (dn <= 0.0):
            t = dc / (dc - dn)
            outx[m] = px[j] + (px[k] - px[j]) * t
            outy[m] = py[j] + (py[k] - py[j]) * t
            m += 1
    return m


@njit(cache=True)
def _cell_nb(sites, i, half, nbr_row, px, py, tx, ty):
    sx = sites[i, 0]
    sy = sites[i, 1]
    px[0] = -half
    py[0] = -half
    px[1] = half
    py[1] = -half
    px[2] = half
    py[2] = half
    px[3] = -half
    py[3] = half
    n = 4
    for jj in range(nbr_row.shape[0]):
        j = nbr_row[jj]
        if j < 0:
            break
        m = _clip_nb(px, py, n, sx, sy, sites[j, 0], sites[j, 1], tx, ty)
        if m > px.shape[0]:
            raise ValueError("cell polygon exceeded vertex capacity")
        for v in range(m):
            px[v] = tx[v]
            py[v] = ty[v]
        n = m
    return n


@njit(cache=True)
def _sample_polygon_nb(px, py, n, u0, u1, u2):
    total = 0.0
    for j in range(1, n - 1):
        cross = (px[j] - px[0]) * (py[j + 1] - py[0]) - (py[j] - py[0]) * (px[j + 1] - px[0])
        total += 0.5 * abs(cross)
    target = u0 * total
    acc = 0.0
    pick = n - 2
    for j in range(1, n - 1):
        cross = (px[j] - px[0]) * (py[j + 1] - py[0]) - (py[j] - py[0]) * (px[j + 1] - px[0])
        acc += 0.5 * abs(cross)
        if acc > target:
            pick = j
            break
    a = u1
    b = u2
    if a + b > 1.0:
        a = 1.0 - a
        b = 1.0 - b
    x = px[0] + a * (px[pick] - px[0]) + b * (px[pick + 1] - px[0])
    y = py[0] + a * (py[pick] - py[0]) + b * (py[pick + 1] - py[0])
    return x, y


@njit(cache=True)
def sample_in_cells_nb(sites, half, uniforms, nbrs):
    n_sites = sites.shape[0]
    out = np.empty((n_sites, 2))
    px = np.empty(MAX_VERTICES)
    py = np.empty(MAX_VERTICES)
    tx = np.empty(MAX_VERTICES)
    ty = np.empty(MAX_VERTICES)
    for i in range(n_sites):
        n = _cell_nb(sites, i, half, nbrs[i], px, py, tx, ty)
        x, y = _sample_polygon_nb(px, py, n, uniforms[i, 0], uniforms[i, 1], uniforms[i, 2])
        out[i, 0] = x
        out[i, 1] = y
    return out


@njit(cache=True)
def cell_polygon_nb(sites, i, half, nbrs):
    px = np.empty(MAX_VERTICES)
    py = np.empty(MAX_VERTICES)
    tx = np.empty(MAX_VERTICES)
    ty = np.empty(MAX_VERTICES)
    n = _cell_nb(sites, i, half, nbrs[i], px, py, tx, ty)
    out = np.empty((n, 2))
    out[:, 0] = px[:n]
    out[:, 1] = py[:n]
    return out


@njit(cache=True)
def faded_sum_nb(points, rx, ry, gains, eta):
    total = 0.0
    half_eta = 0.5 * eta
    k_int = int(half_eta)
    integral = k_int == half_eta and k_int >= 1
    for k in range(points.shape[0]):
        dx = points[k, 0] - rx
        dy = points[k, 1] - ry
        d2 = dx * dx + dy * dy
        if integral:
            pw = d2
            for _ in range(k_int - 1):
                pw = pw * d2
            total += gains[k] / pw
        else:
            total += gains[k] * d2 ** (-half_eta)
    return total


# ---------------------------------------------------------------------------
# numpy

def _cells_np(sites, half, nbrs):
    """All clipped cells at once: (vertices, counts) padded to MAX_VERTICES."""
    n_sites = len(sites)
    polys = np.zeros((n_sites, MAX_VERTICES, 2))
    polys[:, :4] = box_polygon(half)
    counts = np.full(n_sites, 4)
    slots = np.arange(MAX_VERTICES)
    for jj in range(nbrs.shape[1]):
        nb = nbrs[:, jj]
        idx = np.nonzero(nb >= 0)[0]
        if len(idx) == 0:
            break
        p = polys[idx]
        cnt = counts[idx]
        s = sites[idx]
        q = sites[nb[idx]]
        nrm = q - s
        halfn = 0.5 * (nrm[:, 0] * nrm[:, 0] + nrm[:, 1] * nrm[:, 1])
        nxt = np.where(slots[None, :] + 1 < cnt[:, None], slots[None, :] + 1, 0)
        pn = np.take_along_axis(p, nxt[..., None], axis=1)
        dc = (p[..., 0] - s[:, None, 0]) * nrm[:, None, 0] + (p[..., 1] - s[:, None, 1]) * nrm[:, None, 1] - halfn[:, None]
        dn = (pn[..., 0] - s[:, None, 0]) * nrm[:, None, 0] + (pn[..., 1] - s[:, None, 1]) * nrm[:, None, 1] - halfn[:, None]
        v = slots[None, :] < cnt[:, None]
        inc = dc <= 0.0
        cross = inc != (dn <= 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            # non-crossing edges give junk here; they are masked out below
            t = dc / (dc - dn)
            ix = p[..., 0] + (pn[..., 0] - p[..., 0]) * t
            iy = p[..., 1] + (pn[..., 1] - p[..., 1]) * t
        # emission order per edge: current vertex, then the crossing point
        cand = np.empty((len(idx), 2 * MAX_VERTICES, 2))
        cand[:, 0::2] = p
        cand[:, 1::2, 0] = ix
        cand[:, 1::2, 1] = iy
        keep = np.empty((len(idx), 2 * MAX_VERTICES), dtype=bool)
        keep[:, 0::2] = inc & v
        keep[:, 1::2] = cross & v
        new_counts = keep.sum(axis=1)
        if new_counts.max() > MAX_VERTICES:
            raise ValueError("cell polygon exceeded vertex capacity")
        pos = np.cumsum(keep, axis=1) - 1
        out = np.zeros((len(idx), MAX_VERTICES, 2))
        r, c = np.nonzero(keep)
        out[r, pos[r, c]] = cand[r, c]
        polys[idx] = out
        counts[idx] = new_counts
    return polys, counts


def _sample_polygons_np(polys, counts, uniforms):
    n_sites = len(polys)
    slots = np.arange(MAX_VERTICES - 1)
    v0 = polys[:, :1, :]
    a = polys[:, :-1, :] - v0
    b = polys[:, 1:, :] - v0
    area = 0.5 * np.abs(a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
    # fan triangles (v0, v_j, v_j+1) for j = 1 .. count-2
    tri = (slots[None, :] >= 1) & (slots[None, :] <= counts[:, None] - 2)
    area = np.where(tri, area, 0.0)
    cum = np.cumsum(area, axis=1)
    target = uniforms[:, 0] * cum[:, -1]
    hit = tri & (cum > target[:, None])
    pick = np.where(hit.any(axis=1), hit.argmax(axis=1), counts - 2)
    rows = np.arange(n_sites)
    u1 = uniforms[:, 1].copy()
    u2 = uniforms[:, 2].copy()
    flip = u1 + u2 > 1.0
    u1[flip] = 1.0 - u1[flip]
    u2[flip] = 1.0 - u2[flip]
    p0 = polys[:, 0]
    pa = polys[rows, pick]
    pb = polys[rows, pick + 1]
    return p0 + u1[:, None] * (pa - p0) + u2[:, None] * (pb - p0)


def sample_in_cells_np(sites, half, uniforms, nbrs):
    polys, counts = _cells_np(sites, half, nbrs)
    return _sample_polygons_np(polys, counts, uniforms)


def cell_polygon_np(sites, i, half, nbrs):
    polys, counts = _cells_np(sites, half, nbrs)
    return polys[i, :counts[i]].copy()


def faded_sum_np(points, rx, ry, gains, eta):
    dx = points[:, 0] - rx
    dy = points[:, 1] - ry
    d2 = dx * dx + dy * dy
    half_eta = 0.5 * eta
    if half_eta == int(half_eta) and half_eta >= 1:
        # even eta: repeated products, exactly as the compiled loop does
        pw = d2.copy()
        for _ in range(int(half_eta) - 1):
            pw = pw * d2
        terms = gains / pw
    else:
        terms = gains * d2 ** (-half_eta)  # libm vs SIMD pow: may differ in the last bit
    # left-to-right accumulation, matching the compiled loop bit for bit
    return float(np.cumsum(terms)[-1])


# ---------------------------------------------------------------------------
# dispatch

def sample_in_cells(sites, half, uniforms):
    """One area-uniform point per Voronoi cell of ``sites`` (clipped to the box).

    ``uniforms`` has shape (n, 3): triangle choice plus two barycentric draws.
    """
    sites = np.ascontiguousarray(sites, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if len(sites) == 0:
        return np.empty((0, 2))
    nbrs = voronoi_neighbors(sites)
    if numba_enabled():
        return sample_in_cells_nb(sites, float(half), uniforms, nbrs)
    return sample_in_cells_np(sites, float(half), uniforms, nbrs)


def cell_polygon(sites, i, half):
    sites = np.ascontiguousarray(sites, dtype=np.float64)
    nbrs = voronoi_neighbors(sites)
    if numba_enabled():
        return cell_polygon_nb(sites, int(i), float(half), nbrs)
    return cell_polygon_np(sites, int(i), float(half), nbrs)


def faded_sum(points, receiver, gains, eta):
    """sum_k gains[k] * |points[k] - receiver|^-eta."""
    if len(points) == 0:
        return 0.0
    points = np.ascontiguousarray(points, dtype=np.float64)
    gains = np.ascontiguousarray(gains, dtype=np.float64)
    rx, ry = float(receiver[0]), float(receiver[1])
    if numba_enabled():
        return float(faded_sum_nb(points, rx, ry, gains, float(eta)))
    return faded_sum_np(points, rx, ry, gains, float(eta))
