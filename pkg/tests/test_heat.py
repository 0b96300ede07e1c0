import math

import numpy as np
import pytest
from scipy import linalg

from conftest import AbstractGraph, erdos_renyi
from rggcert.errors import DegreeError, DomainError, FrameError
from rggcert.geograph import build_epsilon_graph, sp_distance_matrix
from rggcert.heat import (
    default_levels,
    envelope_table,
    heat_kernel,
    laplacians,
    localization_profile,
    localization_ratio,
    mid_band_level,
    spectral_decomposition,
    subgaussian_envelope,
    wavelet_bank,
    write_envelope_csv,
    write_localization_csv,
)

EDGE = np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture(scope="module")
def small_graph():
    return AbstractGraph(erdos_renyi(150, 0.05, 7))


def test_single_edge_laplacians():
    L, Ls, deg = laplacians(AbstractGraph(EDGE))
    expected = np.array([[1.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_array_equal(L, expected)
    np.testing.assert_array_equal(Ls, expected)
    assert deg.tolist() == [1.0, 1.0]


def test_laplacian_properties(small_graph):
    L, Ls, deg = laplacians(small_graph)
    np.testing.assert_allclose(L @ np.ones(small_graph.n), 0.0, atol=1e-14)
    assert np.max(np.abs(Ls - Ls.T)) <= 1e-12
    lam = np.linalg.eigvalsh(Ls)
    assert lam.min() >= -1e-10 and lam.max() <= 2 + 1e-10
    s = np.sqrt(deg)
    np.testing.assert_allclose(Ls, (s[:, None] * L) / s[None, :], atol=1e-12)


def test_spectral_reconstruction(small_graph):
    sd = spectral_decomposition(small_graph)
    _, Ls, deg = laplacians(small_graph)
    assert np.max(np.abs(sd.apply(lambda lam: lam) - Ls)) <= 1e-8
    assert abs(sd.eigenvalues[0]) <= 1e-10
    v = np.sqrt(deg) / np.linalg.norm(np.sqrt(deg))
    assert abs(abs(sd.eigenvectors[:, 0] @ v) - 1.0) <= 1e-8
    assert np.all(np.diff(sd.eigenvalues) >= 0)
    with pytest.raises(DomainError):
        spectral_decomposition(small_graph, cap=100)


def test_isolated_vertex_rejected():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1
    with pytest.raises(DegreeError):
        laplacians(AbstractGraph(A))


def test_heat_kernel_time_zero(small_graph):
    P, Q = heat_kernel(small_graph, 0.0)
    np.testing.assert_allclose(P, np.eye(small_graph.n), atol=1e-10)
    np.testing.assert_allclose(Q, np.diag(1.0 / small_graph.degrees), atol=1e-10)
    with pytest.raises(DomainError):
        heat_kernel(small_graph, -1.0)


def test_heat_kernel_stationary_limit():
    g = AbstractGraph(erdos_renyi(20, 0.3, 4))
    P, _ = heat_kernel(g, 1000.0)
    pi = g.degrees / g.degrees.sum()
    np.testing.assert_allclose(P, np.tile(pi, (20, 1)), atol=1e-6)


def test_single_edge_closed_form():
    P, Q = heat_kernel(AbstractGraph(EDGE), 1.0)
    a, b = (1 + math.exp(-2)) / 2, (1 - math.exp(-2)) / 2
    np.testing.assert_allclose(P, [[a, b], [b, a]], atol=1e-14)
    np.testing.assert_allclose(Q, P, atol=1e-14)


def test_heat_kernel_matches_expm(small_graph):
    L, _, deg = laplacians(small_graph)
    P, Q = heat_kernel(small_graph, 2.5)
    expm = linalg.expm(-2.5 * L)
    assert np.max(np.abs(P - expm)) <= 1e-10
    assert np.max(np.abs(Q - expm / deg[None, :])) <= 1e-10


def test_heat_kernel_invariants(small_graph):
    sd = spectral_decomposition(small_graph)
    for t, s in ((0.5, 1.5), (3.0, 4.0), (10.0, 0.1)):
        P_ts = sd.heat_semigroup(t + s)
        assert np.max(np.abs(P_ts - sd.heat_semigroup(t) @ sd.heat_semigroup(s))) <= 1e-8
    for t in (0.1, 1.0, 7.0, 50.0):
        P, Q = heat_kernel(small_graph, t, sd)
        assert np.max(np.abs(P.sum(axis=1) - 1.0)) <= 1e-10
        assert P.min() >= -1e-12
        assert np.max(np.abs(Q - Q.T)) <= 1e-10
        assert Q.min() >= -1e-10
        d = np.sqrt(np.diag(Q))
        assert np.all(Q <= np.outer(d, d) + 1e-12)


def test_envelope_degenerate_complete_graph():
    g = AbstractGraph(np.ones((8, 8)) - np.eye(8))
    rep = subgaussian_envelope(g, [1.0, 2.0], [0, 1])
    assert not rep.spread_ok
    assert rep.verdict == "fail"
    assert math.isnan(rep.slope)


def test_envelope_rows(circle):
    g = build_epsilon_graph(circle.sample(200, 1), 0.25)
    rows = envelope_table(g, [4.0], [3])
    hops = sp_distance_matrix(g, [3])[0]
    assert len(rows) == int(np.sum(hops <= 4))
    vol = g.degrees[hops <= 2].sum()
    diag = [r for r in rows if r[1] == 3][0]
    assert diag[2] == 0.0 and diag[5] == vol
    rep = subgaussian_envelope(g, [4.0, 9.0], [0, 50, 100])
    assert rep.n_points > 0 and rep.spread_ok
    assert rep.c2 == -rep.slope and rep.c1 == pytest.approx(math.exp(rep.intercept))


def test_identity_for_flat_band(small_graph):
    sd = spectral_decomposition(small_graph)
    bank = wavelet_bank(sd, [0], band=lambda x: np.ones_like(np.asarray(x, dtype=float)), lowpass=False)
    np.testing.assert_allclose(bank.kernel(0), np.eye(small_graph.n), atol=1e-10)


def test_frame_partition_and_square_sum(small_graph):
    sd = spectral_decomposition(small_graph)
    levels = default_levels(sd)
    bank = wavelet_bank(sd, levels)
    total = bank.frame_sum()
    assert np.max(np.abs(total - 1.0)) <= 1e-8
    assert bank.frame_bounds[0] >= 1 - 1e-8 and bank.frame_bounds[1] <= 1 + 1e-8
    # oracle: an independent eigensolve of L'
    _, Ls, _ = laplacians(small_graph)
    lam, U = np.linalg.eigh(Ls)
    squares = sum(K @ K for K in bank.kernels.values())
    oracle = (U * bank.frame_sum()[np.argsort(np.argsort(sd.eigenvalues))]) @ U.T
    assert np.max(np.abs(squares - oracle)) <= 1e-8
    for K in bank.kernels.values():
        assert np.max(np.abs(K - K.T)) <= 1e-12


def test_kernel_formula(small_graph):
    sd = spectral_decomposition(small_graph)
    bank = wavelet_bank(sd, default_levels(sd))
    l = mid_band_level(sd)
    U, lam = sd.eigenvectors, sd.eigenvalues
    explicit = sum(math.sqrt(z) * np.outer(U[:, j], U[:, j]) for j, z in enumerate(bank.multipliers[l]) if z > 0)
    assert np.max(np.abs(bank.kernel(l) - explicit)) <= 1e-8
    assert lam[lam > 1e-10].size > 0


def test_uncovered_spectrum_raises(small_graph):
    sd = spectral_decomposition(small_graph)
    with pytest.raises(FrameError):
        wavelet_bank(sd, [0], lowpass=False)
    with pytest.raises(FrameError):
        wavelet_bank(sd, [])


def test_mid_band_level_centres_median(small_graph):
    sd = spectral_decomposition(small_graph)
    med = float(np.median(sd.eigenvalues[sd.eigenvalues > 1e-10]))
    l = mid_band_level(sd)
    assert abs(math.log2(med) - l) <= 0.5
    assert mid_band_level(sd, [3, 4]) == 3


def test_localization_profile_and_ratio():
    profile = [
        {"lo": 0.0, "hi": 1.0, "count": 2, "mean": 1.0, "max": 1.0},
        {"lo": 1.0, "hi": 2.0, "count": 2, "mean": 0.5, "max": 0.6},
        {"lo": 2.0, "hi": 4.0, "count": 4, "mean": 0.1, "max": 0.2},
    ]
    assert localization_ratio(profile) == pytest.approx(0.1)
    g = AbstractGraph(erdos_renyi(40, 0.1, 2))
    sd = spectral_decomposition(g)
    bank = wavelet_bank(sd, default_levels(sd))
    hops = sp_distance_matrix(g, [0, 1])
    prof = localization_profile(bank, 0, hops, 1.0, sources=[0, 1])
    assert sum(p["count"] for p in prof) == int(np.sum(hops < 16))
    assert prof[0]["count"] == 2 and prof[0]["mean"] == pytest.approx(abs(bank.kernel(0)[[0, 1], [0, 1]]).mean())


def test_csv_column_order(tmp_path, circle):
    g = build_epsilon_graph(circle.sample(100, 0), 0.4)
    rows = envelope_table(g, [4.0], [0])
    write_envelope_csv(tmp_path / "e.csv", rows)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "x,y,d_sp,t_or_level,value" and len(lines) == len(rows) + 1
    sd = spectral_decomposition(g)
    bank = wavelet_bank(sd, default_levels(sd))
    hops = sp_distance_matrix(g, [0, 5])
    write_localization_csv(tmp_path / "k.csv", bank, 0, hops, [0, 5])
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "x,y,d_sp,t_or_level,value" and len(lines) == 201
    x, y, d, lvl, v = lines[2].split(",")
    assert (int(x), int(y), int(lvl)) == (0, 1, 0) and float(v) == bank.kernel(0)[0, 1]


@pytest.mark.slow
def test_envelope_slope_monte_carlo(circle):
    negative = 0
    for seed in range(100):
        g = build_epsilon_graph(circle.sample(800, seed), 0.15)
        rep = subgaussian_envelope(g, [4.0, 9.0, 16.0], [0, 200, 400, 600])
        negative += rep.spread_ok and rep.slope < 0
    assert negative >= 95
