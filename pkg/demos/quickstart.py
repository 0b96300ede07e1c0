"""Sample a circle, build the epsilon-graph and run a few certificates by hand.

    python demos/quickstart.py [--n 1000] [--eps 0.2] [--seed 0]
"""

import argparse

import numpy as np

from rggcert.distances import check_ge_vs_manifold, check_sandwich_sp_ge
from rggcert.doubling import certify_vd, exponent_u_open, governing_mass_floor
from rggcert.geograph import DEGREE_VOLUME, EMPIRICAL, build_epsilon_graph
from rggcert.manifolds import make_model
from rggcert.poincare import certify_lpi, lpi_constants, lpi_weights


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    circle = make_model("circle", [1.0])
    g = build_epsilon_graph(circle.sample(args.n, args.seed), args.eps)
    print(f"graph: n={g.n}, edges={g.n_edges}, degrees {g.deg_min}..{g.deg_max}")

    sandwich = check_sandwich_sp_ge(g)
    print(f"sandwich: {sandwich.verdict} on {sandwich.pairs_checked} pairs")
    iso = check_ge_vs_manifold(g, circle, 1 / 3, 1 / 3)
    print(f"graph vs geodesic distance: {iso.verdict}, assumptions met: {iso.assumptions_met}")

    u = exponent_u_open(1 / 3, 1 / 3, circle.doubling_v)
    vd = certify_vd(g, EMPIRICAL, floor=governing_mass_floor(args.n, 0.1), exponent=u)
    print(f"volume doubling: {vd.verdict}, worst ratio {vd.max_ratio_all:.3f} vs 2^u = {2**u:.1f}")

    w = lpi_weights(g, DEGREE_VOLUME)
    const = lpi_constants(circle, args.n, args.eps, 1 / 3, 1 / 3, 0.5,
                          float(w.max() / w.sum()), float(w.min() / w.sum()), 0.5, 0.5)
    rep = certify_lpi(g, DEGREE_VOLUME, const, np.arange(0, args.n, args.n // 5))
    print(f"local Poincare: {len(rep.balls)} balls, pass rate {rep.pass_rate:.2f}, "
          f"largest C_emp {rep.max_C_emp:.3f} vs bound {const.C_hat:.3g}")


if __name__ == "__main__":
    main()
