"""Charts to the unit cube, cube grids and random Hamming path ensembles.

A chart ``h = g0 . g1 . g2 . g3`` sends a closed geodesic ball onto
``[0, 1]^k``: ``g3`` is the log map at the centre, ``g2`` divides by the
ball radius, ``g1`` is the radial ball-to-cube map ``u |-> u |u|_2 / |u|_inf``
and ``g0`` is the affine map ``x |-> (x + 1) / 2``.

A random Hamming path between vertices ``x`` and ``y`` follows the cell path
that fixes coordinate 1 first, then coordinate 2, and so on, and visits one
uniformly chosen vertex in every interior cell.  Pairs in the same or in
face-adjacent cells use the edge ``(x, y)`` directly.  Expected edge loads are
computed exactly by aggregating over cell pairs instead of vertex pairs.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import DomainError, InternalConsistencyError, PreconditionError
from .rng import make_rng

G3_LIPSCHITZ_MIN = 0.4  # (1 + pi^2/8)^-1 >= 0.4
G3_LIPSCHITZ_MAX = 1.7  # (1 - pi^2/24)^-1 <= 1.7
G0_LIPSCHITZ = 0.5
CUBE_TOL = 1e-9


# ball-to-cube radial map ----------------------------------------------------

def radial_ball_to_cube(u):
    u = np.atleast_2d(np.asarray(u, dtype=float))
    n2 = np.linalg.norm(u, axis=1)
    ninf = np.abs(u).max(axis=1)
    scale = np.divide(n2, ninf, out=np.ones_like(n2), where=ninf > 0)
    return u * scale[:, None]


def radial_cube_to_ball(v):
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n2 = np.linalg.norm(v, axis=1)
    ninf = np.abs(v).max(axis=1)
    scale = np.divide(ninf, n2, out=np.ones_like(n2), where=n2 > 0)
    return v * scale[:, None]


def _radial_jacobians(dirs):
    """Jacobians of the radial map at unit vectors ``dirs`` (degree-0 homogeneous)."""
    k = dirs.shape[1]
    j = np.argmax(np.abs(dirs), axis=1)
    uj = dirs[np.arange(dirs.shape[0]), j]
    n2 = np.linalg.norm(dirs, axis=1)
    s = n2 / np.abs(uj)
    grad = dirs / (n2 * np.abs(uj))[:, None]
    grad[np.arange(dirs.shape[0]), j] -= n2 * np.sign(uj) / uj**2
    return s[:, None, None] * np.eye(k)[None] + dirs[:, :, None] * grad[:, None, :]


@lru_cache(maxsize=None)
def radial_map_lipschitz(k, resolution=200_000):
    """``(inf sigma_min, sup sigma_max)`` of the radial map's Jacobian.

    The map is piecewise smooth on convex domains, so these are its lower and
    upper Lipschitz constants.  Its Jacobian depends only on the direction;
    for ``k = 2`` a dense angle grid (including the diagonals) is scanned, for
    larger ``k`` a seeded set of random directions.
    """
    if k == 1:
        return 1.0, 1.0
    if k == 2:
        theta = np.linspace(0.0, 2 * math.pi, resolution, endpoint=False)
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        dirs = make_rng(0, "radial-lipschitz", k).standard_normal((resolution, k))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sv = np.linalg.svd(_radial_jacobians(dirs), compute_uv=False)
    return float(sv[:, -1].min()), float(sv[:, 0].max())


def default_lipschitz_star(k):
    """``L*_min, L*_max`` from the factor constants of the chart composition."""
    g1min, g1max = radial_map_lipschitz(k)
    return G3_LIPSCHITZ_MIN * G0_LIPSCHITZ * g1min, G3_LIPSCHITZ_MAX * G0_LIPSCHITZ * g1max


# chart -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CubeChart:
    model: object
    center: np.ndarray
    r_M: float
    L_star_min: float
    L_star_max: float

    @property
    def k(self):
        return self.model.k

    @property
    def L_min(self):
        return self.L_star_min / self.r_M

    @property
    def L_max(self):
        return self.L_star_max / self.r_M

    def forward(self, points):
        """Map points of the closed ball ``B_M(center, r_M)`` into ``[0, 1]^k``."""
        pts = np.atleast_2d(points)
        d = self.model.distances_from(self.center, pts)
        if np.any(d > self.r_M * (1 + CUBE_TOL)):
            raise DomainError("point outside the chart ball")
        u = self.model.exp_inverse(self.center, pts) / self.r_M
        x = 0.5 * (radial_ball_to_cube(u) + 1.0)
        return np.clip(x, 0.0, 1.0)

    def inverse(self, cube_points):
        x = np.atleast_2d(np.asarray(cube_points, dtype=float))
        if np.any(x < -CUBE_TOL) or np.any(x > 1 + CUBE_TOL):
            raise DomainError("point outside the unit cube")
        u = radial_cube_to_ball(2.0 * x - 1.0) * self.r_M
        return self.model.exp_map(self.center, u)

    def metadata(self):
        return {
            "r_M": self.r_M,
            "L_star_min": self.L_star_min,
            "L_star_max": self.L_star_max,
            "L_min": self.L_min,
            "L_max": self.L_max,
            "radial_map_lipschitz": list(radial_map_lipschitz(self.k)),
        }


def build_chart(model, center, r_M, L_star_min=None, L_star_max=None):
    """Chart of the closed ball of radius ``r_M`` around ``center``; needs ``0 < r_M < r_bullet``."""
    if not 0 < r_M < model.r_bullet:
        raise DomainError(f"chart radius {r_M} must lie in (0, r_bullet={model.r_bullet})")
    dmin, dmax = default_lipschitz_star(model.k)
    lo = dmin if L_star_min is None else float(L_star_min)
    hi = dmax if L_star_max is None else float(L_star_max)
    if not 0 < lo <= hi:
        raise DomainError("need 0 < L*_min <= L*_max")
    c = model.check_on_manifold(center)[0]
    return CubeChart(model, c, float(r_M), lo, hi)


# grid --------------------------------------------------------------------

def cells_per_side(k, L_min, epsilon):
    """``1/g = ceil(sqrt(k + 3) / (L_min eps))``; requires the ratio to be at least 1."""
    q = math.sqrt(k + 3) / (L_min * epsilon)
    if q < 1:
        raise DomainError(f"sqrt(k+3)/(L_min eps) = {q:.6g} < 1")
    r = round(q)
    return int(r) if abs(q - r) <= 1e-12 * q else math.ceil(q)


def grid_width(k, L_min, epsilon):
    return 1.0 / cells_per_side(k, L_min, epsilon)


@dataclass(frozen=True)
class GridSpec:
    """Regular grid of ``m^k`` half-open cells on ``[0, 1]^k`` (last cell closed on top)."""

    m: int
    k: int

    @property
    def g(self):
        return 1.0 / self.m

    @property
    def W(self):
        return self.m**self.k

    @property
    def cell_volume(self):
        return self.g**self.k

    def assign(self, cube_points):
        x = np.atleast_2d(np.asarray(cube_points, dtype=float))
        if np.any(x < -CUBE_TOL) or np.any(x > 1 + CUBE_TOL):
            raise DomainError("point outside the unit cube")
        return np.clip(np.floor(x * self.m).astype(np.int64), 0, self.m - 1)

    def flat(self, cells):
        return np.ravel_multi_index(tuple(np.asarray(cells).T), (self.m,) * self.k)

    def coords(self):
        return np.array(list(product(range(self.m), repeat=self.k)), dtype=np.int64).reshape(-1, self.k)


def make_grid(k, L_min, epsilon):
    return GridSpec(cells_per_side(k, L_min, epsilon), k)


def hamming_cell_path(cell_a, cell_b):
    """Cells visited from ``cell_a`` to ``cell_b``, moving along axis 1 first, then axis 2, ..."""
    cur = [int(c) for c in cell_a]
    target = [int(c) for c in cell_b]
    if len(cur) != len(target):
        raise DomainError("cells must have the same dimension")
    path = [tuple(cur)]
    for d in range(len(cur)):
        step = 1 if target[d] > cur[d] else -1
        while cur[d] != target[d]:
            cur[d] += step
            path.append(tuple(cur))
    return path


# ensemble ----------------------------------------------------------------

@dataclass
class PathEnsemble:
    grid: GridSpec
    vertices: np.ndarray  # global ids of the ball vertices
    cells: np.ndarray  # (|B|, k) cell index per vertex
    counts: np.ndarray  # vertices per cell (flat)
    edges: np.ndarray  # (E, 2) global ids, i < j
    expected_loads: np.ndarray
    l_max: int
    total_path_length: float
    meta: dict = field(default_factory=dict)

    @property
    def b_max(self):
        return float(self.expected_loads.max()) if self.expected_loads.size else 0.0

    @property
    def N_min(self):
        return int(self.counts.min())

    @property
    def N_max(self):
        return int(self.counts.max())

    @property
    def l_max_bound(self):
        return self.grid.k * self.grid.m

    @property
    def b_max_bound(self):
        return (1 + self.N_max / self.N_min) ** 2 * self.grid.k * self.grid.m ** (self.grid.k + 1)

    def summary(self):
        return {
            "cells_per_side": self.grid.m,
            "g": self.grid.g,
            "ball_size": int(self.vertices.size),
            "N_min": self.N_min,
            "N_max": self.N_max,
            "l_max": self.l_max,
            "l_max_bound": self.l_max_bound,
            "b_max": self.b_max,
            "b_max_bound": self.b_max_bound,
            "l_max_ok": self.l_max <= self.l_max_bound,
            "b_max_ok": self.b_max <= self.b_max_bound,
        }


def _ball_edges(graph, B):
    sub = graph.induced(B).tocoo()
    keep = sub.row < sub.col
    return np.column_stack([sub.row[keep], sub.col[keep]]).astype(np.int64)


def _pair_tables(grid, counts):
    """Step tables aggregated over all ordered cell pairs with cell distance >= 2.

    Returns ``(inner, start, end, l_max, total_len)`` where each table has shape
    ``(k, 2, m, ..., m)``: axis 0 picks the coordinate, axis 1 the direction
    (0 forward, 1 backward), and the cell index is the cell a step leaves.
    ``inner`` sums ``N_S N_T`` over interior steps, ``start[A]`` counts targets
    ``y`` per source vertex, ``end[A]`` counts sources per target vertex.
    """
    m, k = grid.m, grid.k
    cc = grid.coords()
    N = counts.astype(float)
    si, ti = np.meshgrid(np.arange(cc.shape[0]), np.arange(cc.shape[0]), indexing="ij")
    si, ti = si.ravel(), ti.ravel()
    s, t = cc[si], cc[ti]
    length = np.abs(t - s).sum(axis=1)
    sel = length >= 2
    s, t, si, ti, length = s[sel], t[sel], si[sel], ti[sel], length[sel]
    w = N[si] * N[ti]
    shape = (k, 2) + (m,) * k
    inner = np.zeros(shape)
    start = np.zeros(shape)
    end = np.zeros(shape)
    for d in range(k):
        for direction in (0, 1):
            mask = t[:, d] > s[:, d] if direction == 0 else t[:, d] < s[:, d]
            if not mask.any():
                continue
            other = [t[mask, i] if i < d else s[mask, i] for i in range(k)]
            if direction == 0:
                lo, hi = s[mask, d], t[mask, d]  # steps leave cells lo .. hi-1
            else:
                lo, hi = t[mask, d] + 1, s[mask, d] + 1  # steps leave cells lo .. hi-1
            diff = np.zeros((m,) * d + (m + 1,) + (m,) * (k - d - 1))
            idx_lo = tuple(lo if i == d else other[i] for i in range(k))
            idx_hi = tuple(hi if i == d else other[i] for i in range(k))
            np.add.at(diff, idx_lo, w[mask])
            np.add.at(diff, idx_hi, -w[mask])
            inner[d, direction] += np.take(np.cumsum(diff, axis=d), np.arange(m), axis=d)
    # remove the first and last step of every path from the interior table
    diffs = t - s
    nz = diffs != 0
    d_first = np.argmax(nz, axis=1)
    d_last = k - 1 - np.argmax(nz[:, ::-1], axis=1)
    rows = np.arange(s.shape[0])
    dir_first = (diffs[rows, d_first] < 0).astype(np.int64)
    dir_last = (diffs[rows, d_last] < 0).astype(np.int64)
    last_from = t.copy()
    last_from[rows, d_last] += np.where(dir_last == 0, -1, 1)
    first_idx = (d_first, dir_first) + tuple(s.T)
    last_idx = (d_last, dir_last) + tuple(last_from.T)
    np.add.at(inner, first_idx, -w)
    np.add.at(inner, last_idx, -w)
    np.add.at(start, first_idx, N[ti])
    np.add.at(end, last_idx, N[si])
    return inner, start, end, length, w


def build_ensemble(graph, ball_vertices, chart, grid=None, validate=True):
    """Exact expected loads of the random Hamming paths on the subgraph induced by the ball."""
    B = np.asarray(ball_vertices, dtype=np.int64)
    if grid is None:
        grid = make_grid(chart.k, chart.L_min, graph.epsilon)
    cells = grid.assign(chart.forward(graph.points[B]))
    flat = grid.flat(cells)
    counts = np.bincount(flat, minlength=grid.W)
    if counts.min() < 1:
        raise PreconditionError(f"{int((counts == 0).sum())} of {grid.W} grid cells are empty")
    nB = B.size
    edges_local = _ball_edges(graph, B)

    # pairs in the same or face-adjacent cells must be joined by an edge
    cell_l1 = np.abs(cells[:, None, :] - cells[None, :, :]).sum(axis=2)
    direct = (cell_l1 <= 1) & ~np.eye(nB, dtype=bool)
    if validate:
        adj = graph.induced(B).toarray() > 0
        missing = direct & ~adj
        if missing.any():
            i, j = np.argwhere(missing)[0]
            raise InternalConsistencyError(
                f"vertices {B[i]} and {B[j]} share or neighbour a cell but are not adjacent; grid too coarse"
            )

    inner, start, end, lengths, weights = _pair_tables(grid, counts)
    loads = np.zeros(edges_local.shape[0])
    u, v = edges_local[:, 0], edges_local[:, 1]
    cu, cv = cells[u], cells[v]
    delta = cv - cu
    l1 = np.abs(delta).sum(axis=1)
    loads[l1 <= 1] += 2.0  # direct edge for both orders of the pair
    adj_mask = l1 == 1
    if adj_mask.any():
        a, b = cu[adj_mask].copy(), cv[adj_mask].copy()
        dd = delta[adj_mask]
        d = np.argmax(dd != 0, axis=1)
        back = dd[np.arange(d.size), d] < 0
        a[back], b[back] = b[back].copy(), a[back].copy()  # orient so that b = a + e_d
        Na, Nb = counts[grid.flat(a)].astype(float), counts[grid.flat(b)].astype(float)
        fa = (d, np.zeros_like(d)) + tuple(a.T)
        bb = (d, np.ones_like(d)) + tuple(b.T)
        # vertex orientation: which endpoint sits in cell a
        load = (inner[fa] + inner[bb]) / (Na * Nb)
        load += start[fa] / Nb + start[bb] / Na
        load += end[fa] / Na + end[bb] / Nb
        loads[adj_mask] += load

    n_direct_pairs = int(direct.sum())
    total_len = float(n_direct_pairs + (weights * lengths).sum())
    l_max = int(lengths.max()) if lengths.size else (1 if n_direct_pairs else 0)
    ens = PathEnsemble(
        grid=grid,
        vertices=B,
        cells=cells,
        counts=counts,
        edges=np.column_stack([B[u], B[v]]),
        expected_loads=loads,
        l_max=l_max,
        total_path_length=total_len,
        meta={"chart": chart.metadata()},
    )
    if validate and not math.isclose(loads.sum(), total_len, rel_tol=1e-9, abs_tol=1e-9):
        raise InternalConsistencyError(f"load conservation broken: {loads.sum()} vs {total_len}")
    return ens


# independent references ---------------------------------------------------

def _edge_lookup(ens):
    key = {}
    for e, (a, b) in enumerate(ens.edges):
        key[(int(a), int(b))] = e
        key[(int(b), int(a))] = e
    return key


def _pair_cell_paths(ens):
    B = ens.vertices
    members = {}
    for idx, c in enumerate(map(tuple, ens.cells)):
        members.setdefault(c, []).append(int(B[idx]))
    for i in range(B.size):
        for j in range(B.size):
            if i == j:
                continue
            ci, cj = tuple(ens.cells[i]), tuple(ens.cells[j])
            if sum(abs(a - b) for a, b in zip(ci, cj)) <= 1:
                yield int(B[i]), int(B[j]), None
            else:
                path = hamming_cell_path(ci, cj)
                yield int(B[i]), int(B[j]), [members[c] for c in path[1:-1]]


def enumerate_loads(ens):
    """Expected loads by enumerating every interior choice of every ordered pair."""
    key = _edge_lookup(ens)
    loads = np.zeros(len(ens.edges))
    for x, y, interior in _pair_cell_paths(ens):
        if interior is None:
            loads[key[(x, y)]] += 1.0
            continue
        p = 1.0 / math.prod(len(m) for m in interior)
        for choice in product(*interior):
            seq = (x,) + choice + (y,)
            for a, b in zip(seq[:-1], seq[1:]):
                if (a, b) not in key:
                    raise InternalConsistencyError(f"consecutive path vertices {a}, {b} are not adjacent")
                loads[key[(a, b)]] += p
    return loads


def sample_loads(ens, n_samples, seed):
    """Per-sample edge loads of independently drawn path collections, shape ``(n_samples, E)``."""
    key = _edge_lookup(ens)
    rng = make_rng(seed, "hamming-mc")
    out = np.zeros((n_samples, len(ens.edges)))
    rows = np.arange(n_samples)
    for x, y, interior in _pair_cell_paths(ens):
        if interior is None:
            out[:, key[(x, y)]] += 1.0
            continue
        picks = [np.asarray(m)[rng.integers(0, len(m), n_samples)] for m in interior]
        seq = [np.full(n_samples, x)] + picks + [np.full(n_samples, y)]
        for a, b in zip(seq[:-1], seq[1:]):
            ids = np.fromiter(
                (key.get((int(p), int(q)), -1) for p, q in zip(a, b)), dtype=np.int64, count=n_samples
            )
            if np.any(ids < 0):
                raise InternalConsistencyError("sampled path uses a non-edge")
            np.add.at(out, (rows, ids), 1.0)
    return out


# occupancy ---------------------------------------------------------------

def verify_cell_occupancy_bounds(model, chart, grid, n, delta, epsilon, ensemble=None):
    """Mass bounds on cell occupancy and the failure probability of an empty cell.

    ``w_minus`` is the mass of a metric ball that fits inside the preimage of
    every cell, ``w_plus`` the mass of an ``eps``-ball containing it.  With
    probability at least ``1 - p8`` every cell holds between
    ``(1 - delta)(n - 1) w_minus`` and ``(1 + delta) n w_plus`` sample points.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    k = model.k
    root = math.sqrt(k + 3)
    rho = chart.L_min * epsilon / (4 * root * chart.L_max)
    w_minus = float(model.ball_measure(rho))
    w_plus = float(model.ball_measure(min(epsilon, model.diameter)))
    p8 = 2 * (2 * root / (chart.L_min * epsilon)) ** k * math.exp(-delta * delta * (n - 1) * w_minus / 3.0)
    n_needed = 1.0 / ((1 - delta) * w_minus) + 1
    out = {
        "cells": grid.W,
        "w_minus": w_minus,
        "w_plus": w_plus,
        "p8": p8,
        "N_min_lower": (1 - delta) * (n - 1) * w_minus,
        "N_max_upper": (1 + delta) * n * w_plus,
        "sample_size_needed": n_needed,
        "sample_size_ok": n >= n_needed,
    }
    if ensemble is not None:
        out["N_min"] = ensemble.N_min
        out["N_max"] = ensemble.N_max
        out["N_min_ok"] = ensemble.N_min >= out["N_min_lower"]
        out["N_max_ok"] = ensemble.N_max <= out["N_max_upper"]
    return out


def write_loads_csv(path, ensemble):
    with open(path, "w") as fh:
        fh.write("u,v,expected_load\n")
        for (a, b), w in zip(ensemble.edges, ensemble.expected_loads):
            fh.write(f"{a},{b},{float(w)!r}\n")
