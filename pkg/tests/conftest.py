from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from rggcert.geograph import build_epsilon_graph
from rggcert.manifolds import make_model

ROOT = Path(__file__).resolve().parents[1]

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def erdos_renyi(n, p, seed, connected=True):
    """Dense 0/1 adjacency of a G(n, p) graph, redrawn until connected if requested."""
    rng = np.random.default_rng(seed)
    while True:
        A = (rng.random((n, n)) < p).astype(int)
        A = np.triu(A, 1)
        A = A + A.T
        if not connected:
            return A
        if connected_components(A, directed=False)[0] == 1:
            return A


class AbstractGraph:
    """Minimal stand-in exposing the graph interface used by the spectral and Poincaré code."""

    def __init__(self, A):
        self.A = sparse.csr_matrix(np.asarray(A, dtype=float))
        self.A.sort_indices()
        self.n = self.A.shape[0]
        self.degrees = np.asarray(self.A.sum(axis=1)).ravel().astype(np.int64)
        self.indptr = self.A.indptr
        self.indices = self.A.indices
        self.epsilon = 1.0
        self.points = np.zeros((self.n, 1))

    def adjacency(self):
        return self.A

    def induced(self, vertices):
        v = np.asarray(vertices)
        return self.A[v][:, v]

    def neighbors(self, i):
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @property
    def deg_min(self):
        return int(self.degrees.min())

    @property
    def deg_max(self):
        return int(self.degrees.max())


@pytest.fixture(scope="session")
def circle():
    return make_model("circle", [1.0])


@pytest.fixture(scope="session")
def sphere():
    return make_model("sphere2", [1.0])


@pytest.fixture(scope="session")
def torus():
    return make_model("flat_torus", [1.0, 1.0])


@pytest.fixture(scope="session")
def reference_graph(circle):
    pts = circle.sample(1000, 0)
    return build_epsilon_graph(pts, 0.2)


@pytest.fixture(scope="session")
def reference_config():
    return (ROOT / "configs" / "reference_circle.cfg").read_text()


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record and assert one acceptance verdict line."""
    log = request.config.stash[ACCEPTANCE_KEY]

    def report(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        log.append(line)
        assert ok, line

    return report
