"""Local Poincaré inequalities on hop balls: constants, optimal empirical
constants and the path-congestion constant of a ball.

Throughout, the Dirichlet energy of ``f`` on a vertex set ``S`` is the sum over
unordered edges ``{x, y}`` of the induced subgraph, ``sum (f(x) - f(y))^2``,
i.e. ``f^T L_S f`` for the combinatorial Laplacian ``L_S`` of ``G[S]``.
The weighted variance on ``B`` is ``sum_B w(x) (f(x) - fbar_w)^2`` with the
``w``-weighted mean ``fbar_w``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import csgraph

from .errors import DomainError, InternalConsistencyError
from .geograph import DEGREE_VOLUME, EMPIRICAL, sp_distance_matrix

DENSE_CAP = 800
CROSS_CHECK_RTOL = 1e-6


# elementary quantities -------------------------------------------------------

def weighted_variance(weights, f):
    w = np.asarray(weights, dtype=float)
    f = np.asarray(f, dtype=float)
    mean = np.dot(w, f) / w.sum()
    return float(np.dot(w, (f - mean) ** 2))


def dirichlet_energy(graph, vertices, f):
    """Sum of ``(f(x) - f(y))^2`` over the edges of the subgraph induced by ``vertices``.

    ``f`` is indexed like ``vertices``.
    """
    sub = sparse.triu(graph.induced(vertices), k=1).tocoo()
    f = np.asarray(f, dtype=float)
    return float(np.sum((f[sub.row] - f[sub.col]) ** 2))


def lpi_weights(graph, measure_kind):
    """Vertex weights entering the Poincaré inequality for each measure.

    For the degree-volume measure both sides are multiplied by ``vol(V)``,
    leaving the degrees; for the empirical measure by ``n``, leaving ones.
    """
    if measure_kind == DEGREE_VOLUME:
        return graph.degrees.astype(float)
    if measure_kind == EMPIRICAL:
        return np.ones(graph.n)
    raise DomainError(f"unknown measure kind {measure_kind!r}")


def expansion_factor(lam1, lam2):
    """``lambda = 4 (1 + lam2) / (1 - lam1) + 1``, the radius ratio of the outer ball."""
    if not (0 < lam1 < 1 and 0 < lam2 < 1):
        raise DomainError("lam1 and lam2 must lie in (0, 1)")
    return 4 * (1 + lam2) / (1 - lam1) + 1


# constants -------------------------------------------------------------------

def kappa_general(weights_on_ball, l_max, b_max):
    """``0.5 / w(B) * l_max * max w^2 * b_max`` for a path ensemble on ``B``.

    With loads counted over ordered vertex pairs this bounds the best
    constant in ``Var_w(B) <= kappa * (Dirichlet energy on B)``.
    """
    w = np.asarray(weights_on_ball, dtype=float)
    if w.size == 0 or np.any(w <= 0):
        raise DomainError("weights must be positive on a non-empty ball")
    return 0.5 / w.sum() * l_max * float(w.max()) ** 2 * b_max


def congestion_factor(delta, k, cl, cu, L_star_min, L_star_max, prefactor=2.0):
    """``w = prefactor (1+delta)/(1-delta) cu/cl (L*max/L*min)^k 4^k sqrt(k+3)^k``.

    The general statement uses ``prefactor = 2``; the empirical-measure
    corollary prints ``1``.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    return (
        prefactor * (1 + delta) / (1 - delta) * cu / cl
        * (L_star_max / L_star_min) ** k * 4**k * math.sqrt(k + 3) ** k
    )


def _tail(w, k, L_star_min):
    return (1 + w) ** 2 * k * k * (2 * math.sqrt(k + 3) / L_star_min) ** (k + 2)


def c_kappa(n, epsilon, k, cl, delta, eta_plus, eta_minus, w, L_star_min):
    """Upper bound on ``kappa_B / r_M^2`` for chart balls of radius ``r_M``."""
    return (
        1.0 / (n * epsilon ** (k + 2))
        * eta_plus**2 / ((1 - delta) * cl * eta_minus)
        * _tail(w, k, L_star_min)
    )


@dataclass
class LpiConstants:
    k: int
    n: int
    epsilon: float
    lam1: float
    lam2: float
    delta: float
    L_star_min: float
    L_star_max: float
    lam: float
    w: float
    w_empirical: float
    C_hat: float
    C_star: float
    C_hat_empirical: float
    C_hat_empirical_printed: float
    C_kappa: float
    p4: float
    r_plus: float
    preconditions: dict = field(default_factory=dict)

    @property
    def preconditions_met(self):
        return all(v["pass"] for v in self.preconditions.values())

    def bound_for(self, measure_kind):
        return self.C_hat if measure_kind == DEGREE_VOLUME else self.C_hat_empirical

    def to_dict(self):
        d = asdict(self)
        d["preconditions_met"] = self.preconditions_met
        return d


def lpi_constants(model, n, epsilon, lam1, lam2, delta, eta_plus=None, eta_minus=None,
                  L_star_min=None, L_star_max=None):
    """All constants of the local Poincaré statements for one sampling regime.

    ``eta_plus``/``eta_minus`` bound the vertex weights of the measure used in
    ``C_star`` and ``C_kappa``; they default to the empirical ``1/n``.
    """
    from .hamming import default_lipschitz_star

    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    k, cl, cu = model.k, model.ahlfors_cl, model.ahlfors_cu
    dmin, dmax = default_lipschitz_star(k)
    Lmin = dmin if L_star_min is None else float(L_star_min)
    Lmax = dmax if L_star_max is None else float(L_star_max)
    eta_plus = 1.0 / n if eta_plus is None else float(eta_plus)
    eta_minus = 1.0 / n if eta_minus is None else float(eta_minus)
    lam = expansion_factor(lam1, lam2)
    w = congestion_factor(delta, k, cl, cu, Lmin, Lmax, 2.0)
    w_emp = congestion_factor(delta, k, cl, cu, Lmin, Lmax, 1.0)
    one = 1 - lam1
    ratio = (1 + delta) ** 2 * cu**2 / ((1 - delta) ** 2 * cl**2)
    C_hat = ratio / one ** (2 + 2 * k) * _tail(w, k, Lmin)

    def c_star(eta_p, eta_m, ww):
        return (
            1.0 / (epsilon**k * n) / one**2
            * eta_p**2 / ((1 - delta) * cl * eta_m) * _tail(ww, k, Lmin)
        )

    C_star = c_star(eta_plus, eta_minus, w)
    root = math.sqrt(k + 3)
    p4 = 2 * (2 * root * n * one / Lmin) ** k * math.exp(
        -delta**2 * n * cl / 6 * epsilon**k * Lmin**k / (4**k * root**k * Lmax**k)
    ) + 2 * math.exp(-delta**2 * n * cl * epsilon**k / (6 * one**k))
    r_plus = min(model.r_bullet * one / epsilon, float(n))
    n_needed = (4 * root * Lmax / (Lmin * epsilon)) ** k / ((1 - delta) * cl) + 1
    # the grid condition is checked at the smallest chart radius eps / (1 - lam1)
    grid_ratio = root * (epsilon / one) / (Lmin * epsilon)
    pre = {
        "radius_range": {"pass": model.r_bullet * one / epsilon >= 1, "lhs": model.r_bullet * one / epsilon, "rhs": 1.0},
        "sample_size": {"pass": n >= n_needed, "lhs": float(n), "rhs": n_needed},
        "grid": {"pass": grid_ratio >= 1, "lhs": grid_ratio, "rhs": 1.0},
    }
    return LpiConstants(
        k=k, n=int(n), epsilon=float(epsilon), lam1=lam1, lam2=lam2, delta=delta,
        L_star_min=Lmin, L_star_max=Lmax, lam=lam, w=w, w_empirical=w_emp,
        C_hat=C_hat, C_star=C_star,
        C_hat_empirical=n * c_star(1.0 / n, 1.0 / n, w),
        C_hat_empirical_printed=n * c_star(1.0 / n, 1.0 / n, w_emp),
        C_kappa=c_kappa(n, epsilon, k, cl, delta, eta_plus, eta_minus, w, Lmin),
        p4=p4, r_plus=r_plus, preconditions=pre,
    )


# optimal constants -------------------------------------------------------------

@dataclass
class PoincareResult:
    value: float
    method: str
    size_inner: int
    size_outer: int
    cross_check: float = None  # value from the second route, if computed
    cross_check_skipped: str = None

    @property
    def cross_check_rel_err(self):
        if self.cross_check is None or not np.isfinite(self.value):
            return None
        return abs(self.value - self.cross_check) / max(abs(self.value), 1e-300)


def _laplacian(adj):
    deg = np.asarray(adj.sum(axis=1)).ravel()
    return np.diag(deg) - adj.toarray()


def _centred_variance_matrix(w):
    return np.diag(w) - np.outer(w, w) / w.sum()


def _top_generalized(V, E):
    """Largest ``f^T V f / f^T E f`` over ``f`` orthogonal to constants."""
    m = V.shape[0]
    if m < 2:
        return 0.0
    Q = linalg.null_space(np.ones((1, m)))
    A = Q.T @ V @ Q
    M = Q.T @ E @ Q
    vals = linalg.eigh(A, M, eigvals_only=True, subset_by_index=[m - 2, m - 2])
    return float(vals[0])


def _prepare(weights, graph, inner, outer):
    inner = np.asarray(inner, dtype=np.int64)
    outer = np.unique(np.asarray(outer, dtype=np.int64))
    if inner.size == 0:
        raise DomainError("inner ball is empty")
    if not np.isin(inner, outer).all():
        raise DomainError("inner ball must be contained in the outer ball")
    adj = graph.induced(outer)
    n_comp, _ = csgraph.connected_components(adj, directed=False)
    if n_comp > 1:
        raise InternalConsistencyError(f"outer ball induces {n_comp} components")
    pos = np.searchsorted(outer, inner)
    return np.asarray(weights, dtype=float)[inner], outer, _laplacian(adj), pos


def optimal_poincare_constant(graph, weights, inner, outer, method="schur", dense_cap=DENSE_CAP,
                              cross_check=True):
    """``sup_f Var_w(f; inner) / E(f; outer)`` over non-constant ``f`` on ``outer``.

    The ``schur`` route minimizes the energy over the values outside ``inner``
    (harmonic extension, Kron reduction) and solves a generalized eigenproblem
    of size ``|inner|``.  The ``dense`` route solves the full problem on
    ``outer``; it is used as a cross-check when ``|outer| <= dense_cap``.
    """
    w, outer, L, pos = _prepare(weights, graph, inner, outer)
    V = _centred_variance_matrix(w)

    def schur():
        rest = np.setdiff1d(np.arange(outer.size), pos)
        S = L[np.ix_(pos, pos)]
        if rest.size:
            L_ri = L[np.ix_(rest, pos)]
            S = S - L_ri.T @ linalg.solve(L[np.ix_(rest, rest)], L_ri, assume_a="pos")
        return _top_generalized(V, 0.5 * (S + S.T))

    def dense():
        Vfull = np.zeros_like(L)
        Vfull[np.ix_(pos, pos)] = V
        return _top_generalized(Vfull, L)

    if method == "schur":
        res = PoincareResult(schur(), "schur", len(pos), outer.size)
        if cross_check:
            if outer.size <= dense_cap:
                res.cross_check = dense()
            else:
                res.cross_check_skipped = f"outer ball has {outer.size} > {dense_cap} vertices"
        return res
    if method == "dense":
        if outer.size > dense_cap:
            raise DomainError(f"dense route capped at {dense_cap} vertices")
        return PoincareResult(dense(), "dense", len(pos), outer.size)
    raise DomainError(f"unknown method {method!r}")


def variance_monotonicity(weights, inner, outer, f):
    """``Var_w(f; inner) <= Var_w(f; outer)`` for nested vertex sets; ``f`` is a full vertex function."""
    inner = np.asarray(inner, dtype=np.int64)
    outer = np.asarray(outer, dtype=np.int64)
    if not np.isin(inner, outer).all():
        raise DomainError("sets are not nested")
    w = np.asarray(weights, dtype=float)
    f = np.asarray(f, dtype=float)
    v_in = weighted_variance(w[inner], f[inner])
    v_out = weighted_variance(w[outer], f[outer])
    return v_in, v_out, v_in <= v_out * (1 + 1e-12) + 1e-300


# certification ---------------------------------------------------------------

@dataclass
class BallLpiResult:
    center: int
    r: float
    size_inner: int
    size_outer: int
    C_emp: float
    bound: float
    passes: bool
    cross_check_rel_err: float = None
    cross_check_skipped: str = None


@dataclass
class LpiReport:
    measure_kind: str
    lam: float
    bound: float
    r_plus: float
    balls: list = field(default_factory=list)

    @property
    def pass_rate(self):
        return sum(b.passes for b in self.balls) / len(self.balls) if self.balls else 0.0

    @property
    def max_C_emp(self):
        return max((b.C_emp for b in self.balls), default=0.0)

    def to_dict(self):
        return {
            "measure_kind": self.measure_kind,
            "lambda": self.lam,
            "bound": self.bound,
            "r_plus": self.r_plus,
            "n_balls": len(self.balls),
            "pass_rate": self.pass_rate,
            "max_C_emp": self.max_C_emp,
            "max_cross_check_rel_err": max(
                (b.cross_check_rel_err for b in self.balls if b.cross_check_rel_err is not None), default=None
            ),
        }


def lpi_radii(r_plus):
    """Integer radii in ``[1, r_plus)``."""
    return [float(r) for r in range(1, math.ceil(r_plus)) if r < r_plus]


def certify_lpi(graph, measure_kind, constants, centers, radii=None, dense_cap=DENSE_CAP, cross_check=True):
    """Optimal empirical constant ``C_emp(x, r)`` against the bound for each centre and radius.

    The inner ball is the closed hop ball ``B(x, r)`` and the outer one
    ``B(x, lambda r)``; ``C_emp`` is the optimal constant divided by ``r^2``.
    A non-integer ``r`` is allowed: its inner ball equals that of ``floor(r)``.
    """
    lam = constants.lam
    radii = lpi_radii(constants.r_plus) if radii is None else [float(r) for r in radii]
    for r in radii:
        if not 1 <= r < constants.r_plus:
            raise DomainError(f"radius {r} outside [1, r_plus={constants.r_plus:.6g})")
    w = lpi_weights(graph, measure_kind)
    bound = constants.bound_for(measure_kind)
    report = LpiReport(measure_kind, lam, bound, constants.r_plus)
    centers = np.asarray(centers, dtype=np.int64)
    hops = sp_distance_matrix(graph, centers)
    for row, c in enumerate(centers):
        for r in radii:
            inner = np.nonzero(hops[row] <= r)[0]
            outer = np.nonzero(hops[row] <= lam * r)[0]
            res = optimal_poincare_constant(graph, w, inner, outer, dense_cap=dense_cap, cross_check=cross_check)
            C = res.value / r**2
            report.balls.append(
                BallLpiResult(int(c), r, inner.size, outer.size, C, bound, bool(C <= bound),
                              res.cross_check_rel_err, res.cross_check_skipped)
            )
    return report


def write_lpi_csv(path, report):
    with open(path, "w") as fh:
        fh.write("center,r,size_inner,size_outer,C_emp,bound,passes\n")
        for b in report.balls:
            fh.write(f"{b.center},{float(b.r)!r},{b.size_inner},{b.size_outer},{float(b.C_emp)!r},{float(b.bound)!r},{int(b.passes)}\n")
