import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from conftest import AbstractGraph, erdos_renyi
from rggcert.errors import DomainError, InternalConsistencyError
from rggcert.geograph import DEGREE_VOLUME, EMPIRICAL, build_epsilon_graph, sp_distance_matrix
from rggcert.hamming import build_chart, build_ensemble
from rggcert.poincare import (
    c_kappa,
    certify_lpi,
    congestion_factor,
    dirichlet_energy,
    expansion_factor,
    kappa_general,
    lpi_constants,
    lpi_radii,
    lpi_weights,
    optimal_poincare_constant,
    variance_monotonicity,
    weighted_variance,
    write_lpi_csv,
)


def rayleigh(graph, w, inner, outer, f_outer):
    """Weighted variance on ``inner`` over Dirichlet energy on ``outer`` for ``f`` indexed like ``outer``."""
    pos = np.searchsorted(outer, inner)
    return weighted_variance(w[inner], f_outer[pos]) / dirichlet_energy(graph, outer, f_outer)


# constants -------------------------------------------------------------------

def test_kappa_examples():
    n, m = 1000, 37
    assert kappa_general(np.full(m, 1 / n), 1, 1) == pytest.approx(1 / (2 * n * m), rel=1e-14)
    w = np.random.default_rng(0).uniform(0.1, 2, 20)
    assert kappa_general(3.5 * w, 4, 7.0) == pytest.approx(3.5 * kappa_general(w, 4, 7.0), rel=1e-14)
    with pytest.raises(DomainError):
        kappa_general([], 1, 1)


def test_kappa_triangle():
    g = AbstractGraph(np.ones((3, 3)) - np.eye(3))
    w = np.full(3, 1 / 3)
    # single-edge paths: l_max = 1 and every edge carries the two orders of its pair
    kappa = kappa_general(w, 1, 2)
    assert kappa == pytest.approx(0.5 / 1.0 * 1 * (1 / 9) * 2, rel=1e-14)
    # hand value: sum_x (f - fbar)^2 / 3 = (1/9) sum over edges (f_x - f_y)^2
    opt = optimal_poincare_constant(g, w, np.arange(3), np.arange(3)).value
    assert opt == pytest.approx(1 / 9, rel=1e-12)
    # the path bound is tight on the triangle
    assert opt <= kappa * (1 + 1e-12)


def test_w_and_lambda():
    assert congestion_factor(0.5, 1, 1.0, 1.0, 1.0, 1.0) == pytest.approx(48.0, abs=1e-12)
    assert congestion_factor(0.5, 1, 1.0, 1.0, 1.0, 1.0, prefactor=1.0) == pytest.approx(24.0, abs=1e-12)
    assert expansion_factor(1 / 3, 1 / 3) == pytest.approx(9.0, abs=1e-12)
    assert expansion_factor(1e-12, 1e-12) == pytest.approx(5.0, abs=1e-9)
    with pytest.raises(DomainError):
        expansion_factor(0.0, 0.5)
    with pytest.raises(DomainError):
        congestion_factor(1.0, 1, 1, 1, 1, 1)


def test_c_kappa_scaling():
    args = dict(epsilon=0.2, k=1, cl=1 / math.pi, delta=0.5, eta_plus=1e-3, eta_minus=1e-3, w=48.0, L_star_min=0.5)
    assert c_kappa(2000, **args) == pytest.approx(c_kappa(1000, **args) / 2, rel=1e-14)


def test_lpi_constants_hand_values(circle):
    n, eps, delta = 1000, 0.2, 0.5
    c = lpi_constants(circle, n, eps, 1 / 3, 1 / 3, delta, L_star_min=0.5, L_star_max=0.5)
    cl = cu = 1 / math.pi
    w = 2 * 3 * 1 * 1 * 4 * 2
    assert c.w == pytest.approx(w)
    tail = (1 + w) ** 2 * 1 * (2 * 2 / 0.5) ** 3
    C_hat = (1 / (2 / 3) ** 4) * (1.5**2 * cu**2) / (0.5**2 * cl**2) * tail
    assert c.C_hat == pytest.approx(C_hat, rel=1e-12)
    C_star = 1 / (eps * n) / (2 / 3) ** 2 * (1 / n) ** 2 / (0.5 * cl * (1 / n)) * tail
    assert c.C_star == pytest.approx(C_star, rel=1e-12)
    # for the empirical measure, n C_* is the empirical-measure constant
    assert n * c.C_star == pytest.approx(c.C_hat_empirical, rel=1e-12)
    assert c.C_hat_empirical_printed < c.C_hat_empirical
    assert c.r_plus == pytest.approx(min(math.pi / 2 * (2 / 3) / eps, n))
    assert c.lam == pytest.approx(9.0)
    assert c.preconditions_met
    for key in ("C_hat", "C_star", "C_kappa", "w", "p4", "r_plus"):
        assert c.to_dict()[key] > 0


def test_lpi_preconditions_flagged(circle):
    c = lpi_constants(circle, 1000, 0.2, 1 / 3, 1 / 3, 0.5)
    assert not c.preconditions["sample_size"]["pass"]
    assert not c.preconditions_met


# optimal constant ---------------------------------------------------------------

def char_poly_top(V2, E2):
    """Largest root of det(V2 - mu E2) for 2x2 matrices, from the characteristic polynomial."""
    a = np.linalg.det(E2)
    b = -(V2[0, 0] * E2[1, 1] + V2[1, 1] * E2[0, 0] - V2[0, 1] * E2[1, 0] - V2[1, 0] * E2[0, 1])
    c = np.linalg.det(V2)
    return max(np.roots([a, b, c]).real)


@pytest.mark.parametrize("w", [(1.0, 1.0, 1.0), (1.0, 2.0, 1.0)])
def test_path_graph_three_vertices(w):
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    g = AbstractGraph(A)
    w = np.array(w)
    res = optimal_poincare_constant(g, w, np.arange(3), np.arange(3), method="dense")
    # both forms ignore constants, so fix f(1) = 0 and use coordinates (f(0), f(2))
    P = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    V = np.diag(w) - np.outer(w, w) / w.sum()
    L = np.diag(A.sum(1)) - A
    expected = char_poly_top(P.T @ V @ P, P.T @ L @ P)
    assert res.value == pytest.approx(expected, rel=1e-12)
    assert res.value == pytest.approx(1.0, rel=1e-12)
    schur = optimal_poincare_constant(g, w, np.arange(3), np.arange(3))
    assert schur.value == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_random_graph_against_rayleigh_search(seed):
    A = erdos_renyi(30, 0.15, seed)
    g = AbstractGraph(A)
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 2.0, 30)
    inner = np.sort(rng.choice(30, 12, replace=False))
    outer = np.arange(30)
    res = optimal_poincare_constant(g, w, inner, outer)
    assert res.cross_check_rel_err < 1e-9
    quotients = [rayleigh(g, w, inner, outer, rng.standard_normal(30)) for _ in range(1000)]
    assert max(quotients) <= res.value * (1 + 1e-12)

    def neg(f):
        return -rayleigh(g, w, inner, outer, f)

    best = max(-optimize.minimize(neg, rng.standard_normal(30), method="L-BFGS-B").fun for _ in range(10))
    assert best <= res.value * (1 + 1e-9)
    assert best >= 0.99 * res.value


def test_constant_function_and_disconnected_outer():
    g = AbstractGraph(erdos_renyi(10, 0.4, 1))
    w = np.ones(10)
    assert weighted_variance(w, np.full(10, 3.0)) == 0.0
    assert np.isfinite(optimal_poincare_constant(g, w, np.arange(10), np.arange(10)).value)
    A = np.zeros((4, 4))
    A[0, 1] = A[1, 0] = A[2, 3] = A[3, 2] = 1
    with pytest.raises(InternalConsistencyError):
        optimal_poincare_constant(AbstractGraph(A), np.ones(4), [0, 1], np.arange(4))
    with pytest.raises(DomainError):
        optimal_poincare_constant(g, w, [0, 1], [1, 2])


def test_dense_cap_records_skip():
    g = AbstractGraph(erdos_renyi(40, 0.2, 2))
    res = optimal_poincare_constant(g, np.ones(40), np.arange(10), np.arange(40), dense_cap=20)
    assert res.cross_check is None and "40 > 20" in res.cross_check_skipped
    with pytest.raises(DomainError):
        optimal_poincare_constant(g, np.ones(40), np.arange(10), np.arange(40), method="dense", dense_cap=20)


def test_four_clique_unit_ball(circle):
    g = AbstractGraph(np.ones((4, 4)) - np.eye(4))
    w = lpi_weights(g, DEGREE_VOLUME)
    const = lpi_constants(circle, 1000, 0.2, 1 / 3, 1 / 3, 0.5, L_star_min=0.5, L_star_max=0.5)
    rep = certify_lpi(g, DEGREE_VOLUME, const, [0], radii=[1])
    b = rep.balls[0]
    # sum_x 3 (f - fbar)^2 = (3/4) sum over edges (f_x - f_y)^2 on K4
    assert b.C_emp == pytest.approx(0.75, rel=1e-12)
    assert b.passes and b.C_emp <= const.C_hat
    assert w.tolist() == [3.0] * 4


def test_non_integer_radius(reference_graph, circle):
    const = lpi_constants(circle, reference_graph.n, 0.2, 1 / 3, 1 / 3, 0.5, L_star_min=0.5, L_star_max=0.5)
    rep = certify_lpi(reference_graph, DEGREE_VOLUME, const, [3, 400], radii=[2.0, 2.5])
    for a, b in (rep.balls[:2], rep.balls[2:]):
        assert a.size_inner == b.size_inner
        assert b.size_outer >= a.size_outer
        # C(r~) r~^2 <= C(r) r^2 with the same inner ball and a larger outer ball
        assert b.C_emp * 2.5**2 <= a.C_emp * 2.0**2 * (1 + 1e-10)
        assert b.C_emp <= a.C_emp * (2.0 / 2.5) ** 2 * (1 + 1e-10) <= const.C_hat


def test_monotone_in_outer_ball(reference_graph):
    w = lpi_weights(reference_graph, DEGREE_VOLUME)
    hops = sp_distance_matrix(reference_graph, [10])[0]
    inner = np.nonzero(hops <= 2)[0]
    values = [optimal_poincare_constant(reference_graph, w, inner, np.nonzero(hops <= R)[0]).value for R in (2, 4, 8, 16)]
    assert all(a >= b * (1 - 1e-10) for a, b in zip(values, values[1:]))


@given(st.floats(0.1, 10.0), st.floats(-5.0, 5.0), st.integers(0, 2**31))
def test_rayleigh_affine_invariance(a, b, seed):
    g = AbstractGraph(erdos_renyi(12, 0.4, 3))
    w = np.linspace(1, 2, 12)
    f = np.random.default_rng(seed).standard_normal(12)
    inner, outer = np.arange(6), np.arange(12)
    assert rayleigh(g, w, inner, outer, a * f + b) == pytest.approx(rayleigh(g, w, inner, outer, f), rel=1e-9)


def test_variance_monotonicity_examples():
    w = np.linspace(1, 3, 10)
    f = np.random.default_rng(0).standard_normal(10)
    v_in, v_out, ok = variance_monotonicity(w, np.arange(10), np.arange(10), f)
    assert ok and v_in == v_out
    v_in, v_out, ok = variance_monotonicity(w, [1, 2], np.arange(10), np.ones(10))
    assert ok and v_in == v_out == 0
    with pytest.raises(DomainError):
        variance_monotonicity(w, [1, 2], [2, 3], f)


def test_variance_monotonicity_random_balls():
    rng = np.random.default_rng(5)
    for trial in range(1000):
        pts = rng.uniform(0, 1, size=(40, 2))
        if trial % 50 == 0:
            g = build_epsilon_graph(pts, 0.3)
            hops = sp_distance_matrix(g)
            w = lpi_weights(g, DEGREE_VOLUME) + 1.0
        x = rng.integers(40)
        r1 = rng.integers(0, 4)
        r2 = r1 + rng.integers(0, 4)
        B1, B2 = np.nonzero(hops[x] <= r1)[0], np.nonzero(hops[x] <= r2)[0]
        assert variance_monotonicity(w, B1, B2, rng.standard_normal(40))[2]


@given(st.integers(0, 2**31), st.integers(2, 30))
def test_variance_monotonicity_property(seed, size):
    rng = np.random.default_rng(seed)
    B2 = rng.choice(60, size, replace=False)
    B1 = rng.choice(B2, rng.integers(1, size + 1), replace=False)
    w = rng.uniform(0.01, 5, 60)
    assert variance_monotonicity(w, B1, B2, rng.standard_normal(60) * 10)[2]


def test_lpi_radii_and_domain(reference_graph, circle):
    assert lpi_radii(5.236) == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert lpi_radii(5.0) == [1.0, 2.0, 3.0, 4.0]
    const = lpi_constants(circle, reference_graph.n, 0.2, 1 / 3, 1 / 3, 0.5, L_star_min=0.5, L_star_max=0.5)
    with pytest.raises(DomainError):
        certify_lpi(reference_graph, EMPIRICAL, const, [0], radii=[6.0])
    with pytest.raises(DomainError):
        lpi_weights(reference_graph, "counting")


def test_lpi_csv(tmp_path, reference_graph, circle):
    const = lpi_constants(circle, reference_graph.n, 0.2, 1 / 3, 1 / 3, 0.5, L_star_min=0.5, L_star_max=0.5)
    rep = certify_lpi(reference_graph, EMPIRICAL, const, [0, 1], radii=[1, 2])
    write_lpi_csv(tmp_path / "l.csv", rep)
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "center,r,size_inner,size_outer,C_emp,bound,passes" and len(lines) == 5
    assert rep.to_dict()["max_cross_check_rel_err"] < 1e-9


@pytest.mark.slow
def test_circle_lpi_monte_carlo(circle):
    n, eps = 800, 0.2
    all_pass = 0
    for seed in range(100):
        g = build_epsilon_graph(circle.sample(n, seed), eps)
        w = lpi_weights(g, DEGREE_VOLUME)
        const = lpi_constants(circle, n, eps, 1 / 3, 1 / 3, 0.5, float(w.max() / w.sum()),
                              float(w.min() / w.sum()), 0.5, 0.5)
        rep = certify_lpi(g, DEGREE_VOLUME, const, [seed % n], cross_check=False)
        assert len(rep.balls) == len(lpi_radii(const.r_plus))
        all_pass += rep.pass_rate == 1.0
    assert all_pass >= 90


@pytest.mark.slow
def test_kappa_below_c_kappa(circle):
    n, eps, lam1, r_M = 800, 0.2, 1 / 3, 0.3
    within = 0
    for seed in range(100):
        g = build_epsilon_graph(circle.sample(n, seed), eps)
        const = lpi_constants(circle, n, eps, lam1, 1 / 3, 0.5, L_star_min=0.5, L_star_max=0.5)
        assert const.preconditions_met
        c = g.points[0]
        B = np.nonzero(circle.distances_from(c, g.points) <= r_M)[0]
        ens = build_ensemble(g, B, build_chart(circle, c, r_M, 0.5, 0.5))
        kappa = kappa_general(np.full(B.size, 1 / n), ens.l_max, ens.b_max)
        within += kappa <= const.C_kappa * r_M**2
    assert within >= 95
