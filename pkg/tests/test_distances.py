import itertools
import math

import numpy as np
import pytest

from rggcert.distances import (
    a3_preflight,
    check_ball_inclusions,
    check_ge_vs_manifold,
    check_sandwich_sp_ge,
)
from rggcert.errors import DisconnectedGraphError, DomainError
from rggcert.geograph import build_epsilon_graph, euclidean_graph_distances, sp_distance_matrix
from rggcert.runner import standard_epsilon


def collinear(eps=1.0):
    return build_epsilon_graph([[0.0, 0.0], [0.9 * eps, 0.0], [1.8 * eps, 0.0]], eps)


def test_collinear_sandwich_against_path_enumeration():
    eps = 1.0
    g = collinear(eps)
    # every simple path from 0 to 2 in the 3-vertex graph
    pts = g.points
    best = math.inf
    for mid in ([], [1]):
        path = [0, *mid, 2]
        if all(g.has_edge(a, b) for a, b in zip(path, path[1:])):
            best = min(best, sum(np.linalg.norm(pts[a] - pts[b]) for a, b in zip(path, path[1:])))
    assert best == pytest.approx(1.8 * eps)
    rep = check_sandwich_sp_ge(g)
    assert rep.verdict == "pass"
    assert rep.pairs_checked == 6
    dsp = sp_distance_matrix(g)[0, 2]
    assert dsp == 2
    assert 0.25 * eps * (dsp - 1) <= best <= eps * dsp


def test_sandwich_trivial_pairs():
    eps = 0.5
    g = build_epsilon_graph([[0.0, 0.0], [eps, 0.0]], eps)
    rep = check_sandwich_sp_ge(g)
    assert rep.verdict == "pass"
    assert rep.max_slack == pytest.approx(1.0)  # adjacent pair at distance eps is tight


def test_sandwich_needs_connected():
    g = build_epsilon_graph([[0.0, 0.0], [3.0, 0.0]], 1.0)
    with pytest.raises(DisconnectedGraphError):
        check_sandwich_sp_ge(g)


def test_sandwich_random_pairs_for_large_graph(circle):
    g = build_epsilon_graph(circle.sample(700, 1), 0.1)
    rep = check_sandwich_sp_ge(g, seed=3)
    assert rep.pair_selection.startswith("random:10000")
    assert rep.pairs_checked == 10_000
    assert rep.verdict == "pass"
    again = check_sandwich_sp_ge(g, seed=3)
    assert again.to_json() == rep.to_json()


def test_ge_vs_manifold_diagonal_and_undersampled(circle):
    pts = np.array([[math.cos(t), math.sin(t)] for t in np.linspace(0, 2 * math.pi, 10, endpoint=False)])
    g = build_epsilon_graph(pts, 0.7)
    rep = check_ge_vs_manifold(g, circle, 0.3, 0.3)
    assert not rep.assumptions_met
    assert rep.to_dict()["tag"] == "assumptions-unmet"
    assert not rep.assumptions["A3_sample_size"]["pass"]


def test_a3_epsilon_fail_records_both_sides(circle):
    pre = a3_preflight(circle, 5.0, 10**6, 1 / 3, 1 / 3, 0.1)
    assert not pre["A3_epsilon"]["pass"]
    assert pre["A3_epsilon"]["lhs"] == 5.0
    assert pre["A3_epsilon"]["rhs"] == pytest.approx((2 / math.pi) * math.sqrt(8))
    u = 0.2 * (1 / 3) / 16 / math.pi
    assert a3_preflight(circle, 0.2, 1000, 1 / 3, 1 / 3, 0.1)["A3_sample_size"]["rhs"] == pytest.approx(
        -math.log(0.1 * u) / u
    )
    with pytest.raises(DomainError):
        a3_preflight(circle, 0.2, 1000, 0.0, 1 / 3, 0.1)


@pytest.mark.slow
def test_ge_vs_manifold_monte_carlo(circle):
    ok = 0
    for seed in range(50):
        g = build_epsilon_graph(circle.sample(500, seed), 0.2)
        rep = check_ge_vs_manifold(g, circle, 0.3, 0.3)
        ok += rep.verdict == "pass"
        if rep.verdict == "pass":
            inc = check_ball_inclusions(g, circle, 0.3, 0.3, [1.5, 2, 3, 5], centers=np.arange(0, 500, 10))
            assert inc.verdict == "pass"
    assert ok >= 45


def test_inclusions_trivial_radii(circle):
    g = build_epsilon_graph(circle.sample(200, 2), 0.2)
    tiny = check_ball_inclusions(g, circle, 1 / 3, 1 / 3, [1e-9], centers=[0, 1, 2])
    assert tiny.verdict == "pass"
    huge = check_ball_inclusions(g, circle, 1 / 3, 1 / 3, [1e6], centers=[0, 1, 2])
    assert huge.verdict == "pass"
    with pytest.raises(DomainError):
        check_ball_inclusions(g, circle, 1 / 3, 1 / 3, [0.0])


def test_distances_monotone_in_epsilon(sphere):
    pts = sphere.sample(300, 4)
    prev_sp = prev_ge = None
    for eps in (0.3, 0.4, 0.6):
        g = build_epsilon_graph(pts, eps)
        sp = sp_distance_matrix(g)
        ge = euclidean_graph_distances(g)
        if prev_sp is not None:
            assert np.all(sp <= prev_sp)
            assert np.all(ge <= prev_ge + 1e-12)
        prev_sp, prev_ge = sp, ge


@pytest.mark.slow
def test_failure_rate_decreases_under_standard_schedule(circle):
    rates = []
    for n in (200, 400, 800):
        eps = standard_epsilon(n, 1, c=3.0)
        fails = []
        for seed in range(30):
            g = build_epsilon_graph(circle.sample(n, 1000 + seed), eps)
            if not np.all(np.isfinite(sp_distance_matrix(g, [0]))):
                fails.append(1.0)
                continue
            fails.append(check_ge_vs_manifold(g, circle, 1 / 3, 1 / 3).violation_fraction)
        rates.append(np.mean(fails))
    assert rates[0] >= rates[1] >= rates[2]
    assert rates[0] > rates[2]


def test_report_json_fields(circle):
    g = build_epsilon_graph(circle.sample(100, 0), 0.3)
    d = check_ge_vs_manifold(g, circle, 1 / 3, 1 / 3).to_dict()
    for key in ("theorem", "params", "pairs_checked", "violations", "verdict"):
        assert key in d
    assert d["pairs_checked"] == len(list(itertools.combinations_with_replacement(range(100), 2)))
