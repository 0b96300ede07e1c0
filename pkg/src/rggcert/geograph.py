"""Unweighted epsilon-neighborhood graphs and their metric-measure structure.

Vertices ``x_i`` and ``x_j`` (``i != j``) are adjacent iff
``||x_i - x_j||_2 <= epsilon``.  The comparison is made on squared distances,
``sum((x_i - x_j)**2) <= epsilon**2``, without any tolerance, so boundary ties
are resolved the same way every time.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DisconnectedGraphError, DomainError, GraphConstructionError

EMPIRICAL = "empirical"
DEGREE_VOLUME = "degree_volume"
MEASURE_KINDS = (EMPIRICAL, DEGREE_VOLUME)


@dataclass(frozen=True, eq=False)
class EpsilonGraph:
    """Immutable epsilon-graph in compressed sparse row form.

    ``indices[indptr[i]:indptr[i+1]]`` are the neighbors of ``i`` in increasing
    order, which makes every derived report independent of input order
    conventions.
    """

    points: np.ndarray
    epsilon: float
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def n_edges(self):
        return int(self.indices.size // 2)

    def neighbors(self, i):
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def adjacency(self):
        data = np.ones(self.indices.size, dtype=float)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def weighted_adjacency(self):
        """Adjacency with Euclidean edge lengths as weights."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        w = np.linalg.norm(self.points[rows] - self.points[self.indices], axis=1)
        return sparse.csr_matrix((w, self.indices, self.indptr), shape=(self.n, self.n))

    def edges(self):
        """Undirected edges as an ``(m, 2)`` array with ``i < j``, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def has_edge(self, i, j):
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < nb.size and nb[k] == j)

    @property
    def deg_min(self):
        return int(self.degrees.min())

    @property
    def deg_max(self):
        return int(self.degrees.max())

    def induced(self, vertices):
        """Sparse adjacency of the induced subgraph on ``vertices`` (in the given order)."""
        vertices = np.asarray(vertices)
        return self.adjacency()[vertices][:, vertices]


def _from_pairs(points, epsilon, i, j):
    n = points.shape[0]
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    degrees = np.diff(indptr).astype(np.int64)
    pts = np.array(points, dtype=float)
    pts.setflags(write=False)
    cols = cols.astype(np.int64)
    for arr in (indptr, cols, degrees):
        arr.setflags(write=False)
    return EpsilonGraph(points=pts, epsilon=float(epsilon), indptr=indptr, indices=cols, degrees=degrees)


def build_epsilon_graph(points, epsilon):
    """Build the epsilon-graph with a uniform cell grid of side ``epsilon``.

    Candidate pairs come only from the same or an adjacent cell (``3**K``
    offsets), so the cost is proportional to ``n`` times the local density.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    n, K = pts.shape
    if np.unique(pts, axis=0).shape[0] != n:
        raise GraphConstructionError("vertex coordinates must be distinct")
    if n < 2:
        return _from_pairs(pts, epsilon, np.zeros(0, np.int64), np.zeros(0, np.int64))

    cells = np.floor((pts - pts.min(axis=0)) / epsilon).astype(np.int64) + 1
    span = cells.max(axis=0) + 2
    strides = np.cumprod(np.concatenate([[1], span[:-1]]))
    keys = cells @ strides
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]

    eps2 = float(epsilon) * float(epsilon)
    found_i, found_j = [], []
    for offset in itertools.product((-1, 0, 1), repeat=K):
        off_key = int(np.dot(offset, strides))
        if off_key < 0:
            continue  # each unordered cell pair is visited once via the non-negative offset
        target = keys + off_key
        lo = np.searchsorted(sorted_keys, target, side="left")
        hi = np.searchsorted(sorted_keys, target, side="right")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            continue
        src = np.repeat(np.arange(n), counts)
        starts = np.repeat(lo - np.cumsum(counts) + counts, counts)
        dst = order[starts + np.arange(total)]
        if off_key == 0:
            mask = src < dst
            src, dst = src[mask], dst[mask]
        diff = pts[src] - pts[dst]
        close = np.einsum("ij,ij->i", diff, diff) <= eps2
        src, dst = src[close], dst[close]
        found_i.append(np.minimum(src, dst))
        found_j.append(np.maximum(src, dst))
    i = np.concatenate(found_i) if found_i else np.zeros(0, np.int64)
    j = np.concatenate(found_j) if found_j else np.zeros(0, np.int64)
    return _from_pairs(pts, epsilon, i, j)


def build_epsilon_graph_bruteforce(points, epsilon):
    """Quadratic reference construction over all pairs."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
        raise GraphConstructionError("vertex coordinates must be distinct")
    eps2 = float(epsilon) * float(epsilon)
    ii, jj = [], []
    for a in range(pts.shape[0]):
        d = pts[a + 1 :] - pts[a]
        hit = np.nonzero(np.einsum("ij,ij->i", d, d) <= eps2)[0] + a + 1
        ii.extend([a] * hit.size)
        jj.extend(hit.tolist())
    return _from_pairs(pts, epsilon, np.array(ii, np.int64), np.array(jj, np.int64))


# distances ---------------------------------------------------------------

def sp_distances_from(graph, source):
    """Hop distances from ``source`` (``inf`` for unreachable vertices)."""
    if not 0 <= source < graph.n:
        raise DomainError("invalid vertex id")
    return csgraph.shortest_path(graph.adjacency(), method="D", unweighted=True, indices=source)


def sp_distance_matrix(graph, sources=None):
    """Hop distances from each of ``sources`` (default: all vertices)."""
    idx = np.arange(graph.n) if sources is None else np.asarray(sources)
    return csgraph.shortest_path(graph.adjacency(), method="D", unweighted=True, indices=idx)


def euclidean_graph_distances(graph, sources=None):
    """Shortest summed Euclidean edge length from each of ``sources``."""
    idx = np.arange(graph.n) if sources is None else np.asarray(sources)
    return csgraph.dijkstra(graph.weighted_adjacency(), directed=False, indices=idx)


def euclidean_graph_distance(graph, x, y):
    d = float(euclidean_graph_distances(graph, [x])[0, y])
    if not np.isfinite(d):
        raise DisconnectedGraphError(f"vertices {x} and {y} lie in different components")
    return d


def connected_components(graph):
    _, labels = csgraph.connected_components(graph.adjacency(), directed=False)
    return labels


def is_connected(graph):
    return graph.n > 0 and int(connected_components(graph).max()) == 0


def require_connected(graph):
    if not is_connected(graph):
        n_comp = int(connected_components(graph).max()) + 1 if graph.n else 0
        raise DisconnectedGraphError(f"graph has {n_comp} connected components")


def ball_from_distances(dist, r, closed=True):
    if r < 0:
        raise DomainError("radius must be non-negative")
    return np.nonzero(dist <= r if closed else dist < r)[0]


def ball_sp(graph, center, r, closed=True):
    """Vertices within hop distance ``r`` of ``center`` (``<= r`` closed, ``< r`` open)."""
    return ball_from_distances(sp_distances_from(graph, center), r, closed)


# measures ----------------------------------------------------------------

@dataclass(frozen=True)
class GraphMeasure:
    kind: str
    weights: np.ndarray

    def of(self, vertices):
        return float(self.weights[np.asarray(vertices, dtype=np.int64)].sum())


def graph_measure(graph, kind):
    if kind == EMPIRICAL:
        w = np.full(graph.n, 1.0 / graph.n)
    elif kind == DEGREE_VOLUME:
        vol = graph.degrees.sum()
        if vol == 0:
            raise DomainError("degree volume measure undefined on an edgeless graph")
        w = graph.degrees / vol
    else:
        raise DomainError(f"unknown measure kind {kind!r}")
    return GraphMeasure(kind, w)


def volume(graph, vertices):
    return int(graph.degrees[np.asarray(vertices, dtype=np.int64)].sum())


def measure_of(graph, kind, vertices):
    return graph_measure(graph, kind).of(vertices)


# export ------------------------------------------------------------------

def write_edge_list(path, graph):
    """Header ``n epsilon`` followed by one ``i j`` line per edge (``i < j``)."""
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {float(graph.epsilon)!r}\n")
        for i, j in graph.edges():
            fh.write(f"{i} {j}\n")


def read_edge_list(path):
    with open(path) as fh:
        n_str, eps_str = fh.readline().split()
        pairs = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    return int(n_str), float(eps_str), pairs.reshape(-1, 2)


def write_measure_csv(path, measure):
    with open(path, "w") as fh:
        fh.write("vertex,weight\n")
        for i, w in enumerate(measure.weights):
            fh.write(f"{i},{float(w)!r}\n")
