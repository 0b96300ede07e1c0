"""Distance comparisons between the graph metrics and the manifold metric.

Three statements are checked pair by pair:

* the deterministic sandwich ``eps/4 (d_SP - 1) <= d_GE <= eps d_SP``;
* the Isomap-type comparison ``(1 - lam1) d_M <= d_GE <= (1 + lam2) d_M``,
  which only holds with high probability and is reported as a violation
  fraction;
* the ball inclusions it implies,
  ``B_SP(x, r) ⊆ B_M(x, eps r / (1 - lam1))`` and
  ``B_M(x, rho) ⊆ B_SP(x, 4 (1 + lam2) rho / eps + 1)``.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .geograph import euclidean_graph_distances, require_connected, sp_distance_matrix
from .rng import make_rng

EXHAUSTIVE_MAX_N = 600
RANDOM_PAIRS = 10_000
MAX_LISTED_VIOLATIONS = 100
# relative guard for floating-point rounding in summed edge lengths
ROUND_GUARD = 1e-12


@dataclass
class DistanceReport:
    theorem: str
    params: dict
    pairs_checked: int = 0
    n_violations: int = 0
    violations: list = field(default_factory=list)
    max_slack: float = 0.0
    assumptions: dict = field(default_factory=dict)
    pair_selection: str = "exhaustive"

    @property
    def verdict(self):
        return "pass" if self.n_violations == 0 else "fail"

    @property
    def violation_fraction(self):
        return self.n_violations / self.pairs_checked if self.pairs_checked else 0.0

    @property
    def assumptions_met(self):
        return all(v["pass"] for v in self.assumptions.values())

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = self.verdict
        d["violation_fraction"] = self.violation_fraction
        d["tag"] = "ok" if self.assumptions_met else "assumptions-unmet"
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, default=float)

    def _record(self, bad_idx, rows):
        self.n_violations += int(bad_idx.size)
        room = MAX_LISTED_VIOLATIONS - len(self.violations)
        for t in bad_idx[: max(room, 0)]:
            self.violations.append(tuple(float(c[t]) if c.dtype.kind == "f" else int(c[t]) for c in rows))


def _pairs(n, seed, n_random=RANDOM_PAIRS):
    """All ordered-free pairs ``i <= j`` for small graphs, otherwise seeded random pairs."""
    if n <= EXHAUSTIVE_MAX_N:
        i, j = np.triu_indices(n)
        return i, j, "exhaustive"
    rng = make_rng(seed, "distance-pairs")
    i = rng.integers(0, n, size=n_random)
    j = rng.integers(0, n, size=n_random)
    return i, j, f"random:{n_random}:seed={seed}"


def _rows_for(i, fn):
    """Evaluate per-source distance rows once per distinct source."""
    sources, inv = np.unique(i, return_inverse=True)
    return fn(sources), inv


def check_sandwich_sp_ge(graph, seed=0):
    """Check ``eps/4 (d_SP - 1) <= d_GE <= eps d_SP`` on all (or sampled) pairs."""
    require_connected(graph)
    eps = graph.epsilon
    i, j, how = _pairs(graph.n, seed)
    sp_rows, inv = _rows_for(i, lambda s: sp_distance_matrix(graph, s))
    ge_rows, _ = _rows_for(i, lambda s: euclidean_graph_distances(graph, s))
    dsp = sp_rows[inv, j]
    dge = ge_rows[inv, j]
    lhs = 0.25 * eps * (dsp - 1.0)
    rhs = eps * dsp
    report = DistanceReport("sp_ge_sandwich", {"epsilon": eps, "n": graph.n}, pair_selection=how)
    report.pairs_checked = int(i.size)
    bad = np.nonzero((lhs > dge * (1 + ROUND_GUARD)) | (dge > rhs * (1 + ROUND_GUARD)))[0]
    report._record(bad, (i, j, lhs, dge, rhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = np.where(rhs > 0, dge / rhs, 0.0)
        lower = np.where(dge > 0, lhs / dge, 0.0)
    report.max_slack = float(max(upper.max(initial=0.0), lower.max(initial=0.0)))
    return report


def a3_preflight(model, epsilon, n, lam1, lam2, p1):
    """Evaluate the sampling-regime assumptions needed by the Isomap-type comparison.

    ``(a)``: ``eps < min(s0, (2/pi) r0 sqrt(24 lam1))``.
    ``(b)``: ``n >= -ln(p1 u) / u`` with ``u = mu(B(eps lam2 / 16))``; the
    infimum over centres is the common value on a homogeneous model.
    """
    for name, val in (("lam1", lam1), ("lam2", lam2), ("p1", p1)):
        if not 0 < val < 1:
            raise DomainError(f"{name} must lie in (0, 1)")
    eps_bound = min(model.s0, (2 / math.pi) * model.r0 * math.sqrt(24 * lam1))
    u = model.ball_measure(epsilon * lam2 / 16.0)
    n_min = -math.log(p1 * u) / u if u > 0 else math.inf
    return {
        "A3_epsilon": {"pass": bool(epsilon < eps_bound), "lhs": float(epsilon), "rhs": float(eps_bound)},
        "A3_sample_size": {"pass": bool(n >= n_min), "lhs": float(n), "rhs": float(n_min), "u": float(u)},
    }


def check_ge_vs_manifold(graph, model, lam1, lam2, p1=0.1, seed=0, points=None):
    """Check ``(1 - lam1) d_M <= d_GE <= (1 + lam2) d_M`` pairwise.

    The statement is probabilistic, so a failing preflight only tags the
    report; the comparison is still evaluated and the violation fraction kept.
    """
    require_connected(graph)
    pts = graph.points if points is None else points
    report = DistanceReport(
        "ge_vs_manifold",
        {"epsilon": graph.epsilon, "n": graph.n, "lam1": lam1, "lam2": lam2, "p1": p1},
        assumptions=a3_preflight(model, graph.epsilon, graph.n, lam1, lam2, p1),
    )
    i, j, report.pair_selection = _pairs(graph.n, seed)
    ge_rows, inv = _rows_for(i, lambda s: euclidean_graph_distances(graph, s))
    sources = np.unique(i)
    dm_rows = np.stack([model.distances_from(pts[s], pts) for s in sources])
    dge = ge_rows[inv, j]
    dm = dm_rows[inv, j]
    lhs = (1 - lam1) * dm
    rhs = (1 + lam2) * dm
    report.pairs_checked = int(i.size)
    bad = np.nonzero((lhs > dge * (1 + ROUND_GUARD)) | (dge > rhs * (1 + ROUND_GUARD)))[0]
    report._record(bad, (i, j, lhs, dge, rhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dm > 0, np.maximum(lhs / dge, dge / rhs), 0.0)
    report.max_slack = float(np.nanmax(ratio, initial=0.0))
    return report


def check_ball_inclusions(graph, model, lam1, lam2, radii, p1=0.1, centers=None, points=None):
    """Check both ball inclusions for each centre and each radius in ``radii``.

    ``radii`` are hop radii ``r``; the metric side of the second inclusion is
    tested at ``rho = eps * r``.  Every ball is open.
    """
    require_connected(graph)
    pts = graph.points if points is None else points
    eps = graph.epsilon
    centers = np.arange(graph.n) if centers is None else np.asarray(centers)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise DomainError("radii must be positive")
    report = DistanceReport(
        "ball_inclusions",
        {"epsilon": eps, "n": graph.n, "lam1": lam1, "lam2": lam2, "radii": radii.tolist()},
        assumptions=a3_preflight(model, eps, graph.n, lam1, lam2, p1),
        pair_selection=f"centers:{centers.size}",
    )
    sp = sp_distance_matrix(graph, centers)
    worst = 0.0
    for row, c in enumerate(centers):
        dm = model.distances_from(pts[c], pts)
        dsp = sp[row]
        for r in radii:
            # B_SP(x, r) inside B_M(x, eps r / (1 - lam1))
            m_bound = eps * r / (1 - lam1)
            inner = dm[dsp < r]
            reach = float(inner.max()) if inner.size else 0.0
            # B_M(x, eps r) inside B_SP(x, 4 (1 + lam2) r + 1)
            sp_bound = 4 * (1 + lam2) * r + 1
            inner_sp = dsp[dm < eps * r]
            hops = float(inner_sp.max()) if inner_sp.size else 0.0
            report.pairs_checked += 2
            worst = max(worst, reach / m_bound, hops / sp_bound)
            for which, val, bound in (("sp_in_metric", reach, m_bound), ("metric_in_sp", hops, sp_bound)):
                if not val < bound:
                    report.n_violations += 1
                    if len(report.violations) < MAX_LISTED_VIOLATIONS:
                        report.violations.append((int(c), float(r), which, val, bound))
    report.max_slack = worst
    return report
