"""Volume-doubling exponents and an exhaustive doubling check on hop balls."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geograph import DEGREE_VOLUME, EMPIRICAL, graph_measure, require_connected, sp_distance_matrix

LOG2_6 = math.log2(6.0)
MAX_LISTED = 100


def _ceil(x):
    # snap values that are integers up to rounding, e.g. log2((4/3)/(2/3))
    r = round(x)
    return int(r) if abs(x - r) <= 1e-12 * max(1.0, abs(x)) else math.ceil(x)


def _check_lams(lam1, lam2, v):
    if not (0 < lam1 < 1 and 0 < lam2 < 1):
        raise DomainError("lam1 and lam2 must lie in (0, 1)")
    if not v > 0:
        raise DomainError("v must be positive")


def exponent_u_open(lam1, lam2, v):
    """``log2 6 + ceil(4 + log2((1 + lam2) / (1 - lam1))) v`` for open hop balls."""
    _check_lams(lam1, lam2, v)
    return LOG2_6 + _ceil(4 + math.log2((1 + lam2) / (1 - lam1))) * v


def exponent_u_closed(v):
    """``log2 6 + ceil(4 + log2 3) v`` for closed hop balls."""
    if not v > 0:
        raise DomainError("v must be positive")
    return LOG2_6 + _ceil(4 + math.log2(3.0)) * v


def exponent_u_degree(lam1, lam2, v, c_bullet):
    """Closed-ball exponent plus ``2 log2 c_bullet`` for the degree-volume measure."""
    _check_lams(lam1, lam2, v)
    if not c_bullet >= 1:
        raise DomainError("c_bullet must be >= 1")
    return exponent_u_closed(v) + 2 * math.log2(c_bullet)


def degree_ratio(graph):
    """``c_bullet = deg_max / deg_min``."""
    if graph.deg_min == 0:
        raise DomainError("isolated vertex: degree ratio undefined")
    return graph.deg_max / graph.deg_min


def degree_transfer_bounds(graph, vertex_sets):
    """Extreme values of ``eta_2(B) / eta_1(B)`` over the given sets, with ``c_bullet``.

    On any graph without isolated vertices the ratio lies in ``[1/c_bullet, c_bullet]``.
    """
    e1 = graph_measure(graph, EMPIRICAL)
    e2 = graph_measure(graph, DEGREE_VOLUME)
    ratios = np.array([e2.of(s) / e1.of(s) for s in vertex_sets if len(s)])
    return float(ratios.min()), float(ratios.max()), degree_ratio(graph)


def mass_floor(n, p2, union_factor=3):
    """``8 ln(union_factor n^2 / p2) / n``; the doubling statement prints 3, the deviation bound 4."""
    if not 0 < p2 <= 0.5:
        raise DomainError("p2 must lie in (0, 0.5]")
    if n < 1:
        raise DomainError("n must be >= 1")
    return 8.0 * math.log(union_factor * n * n / p2) / n


def governing_mass_floor(n, p2):
    """The stricter (larger) of the two printed floors."""
    return max(mass_floor(n, p2, 3), mass_floor(n, p2, 4))


def default_radii(graph, hop_diameter=None):
    """Integers and half-integers in ``(1, hop diameter]``."""
    if hop_diameter is None:
        hop_diameter = _hop_diameter(graph)
    return np.arange(1.5, hop_diameter + 0.25, 0.5)


def _hop_diameter(graph):
    d = sp_distance_matrix(graph)
    return int(d[np.isfinite(d)].max())


@dataclass
class DoublingReport:
    measure_kind: str
    closed: bool
    r_grid: list
    exponent_u: float
    floor: float
    total_balls: int = 0
    qualifying_balls: int = 0
    max_ratio: float = 1.0
    max_ratio_all: float = 1.0
    n_violations: int = 0
    violations: list = field(default_factory=list)
    n_violations_below_floor: int = 0

    @property
    def verdict(self):
        return "pass" if self.max_ratio <= 2.0**self.exponent_u else "fail"

    def to_dict(self):
        return {
            "measure_kind": self.measure_kind,
            "closed": self.closed,
            "r_grid": [float(r) for r in self.r_grid],
            "exponent_u": self.exponent_u,
            "bound": 2.0**self.exponent_u,
            "floor": self.floor,
            "total_balls": self.total_balls,
            "qualifying_balls": self.qualifying_balls,
            "no_qualifying_possible": self.floor > 1.0,
            "max_ratio": self.max_ratio,
            "max_ratio_all": self.max_ratio_all,
            "n_violations": self.n_violations,
            "violations": self.violations,
            "n_violations_below_floor": self.n_violations_below_floor,
            "verdict": self.verdict,
        }


def _hop_index(r, closed):
    """Largest hop count inside the ball of radius ``r``."""
    return np.floor(r).astype(np.int64) if closed else np.ceil(r).astype(np.int64) - 1


def ball_masses(hops, weights, radii, closed):
    """Mass of the hop balls ``B(center, r)`` for every row of ``hops`` and every radius.

    ``hops`` is a ``(centers, n)`` hop-distance array (``inf`` allowed).  One
    cumulative histogram per centre serves every radius.
    """
    finite = np.where(np.isfinite(hops), hops, -1).astype(np.int64)
    top = int(finite.max()) + 1
    idx = np.clip(_hop_index(np.asarray(radii, dtype=float), closed), -1, top - 1)
    out = np.empty((hops.shape[0], idx.size))
    for c in range(hops.shape[0]):
        row = finite[c]
        keep = row >= 0
        cum = np.cumsum(np.bincount(row[keep], weights=weights[keep], minlength=top))
        out[c] = np.where(idx >= 0, cum[np.maximum(idx, 0)], 0.0)
    return out


def certify_vd(graph, measure_kind, r_values=None, floor=0.0, exponent=None, closed=False, centers=None):
    """Check ``eta(B(x, 2r)) <= 2^exponent eta(B(x, r))`` on every centre and radius.

    Only balls whose open empirical mass ``eta_1(B_open(x, r))`` reaches
    ``floor`` count towards the verdict; failures below the floor are recorded
    separately.
    """
    require_connected(graph)
    if exponent is None:
        raise DomainError("an exponent is required")
    centers = np.arange(graph.n) if centers is None else np.asarray(centers)
    hops = sp_distance_matrix(graph, centers)
    if r_values is None:
        r_values = default_radii(graph, int(hops.max()))
    r = np.asarray(r_values, dtype=float)
    if np.any(r <= 1) or np.any(r > graph.n):
        raise DomainError("radii must lie in (1, n]")
    w = graph_measure(graph, measure_kind).weights
    inner = ball_masses(hops, w, r, closed)
    outer = ball_masses(hops, w, 2 * r, closed)
    qual_mass = ball_masses(hops, np.full(graph.n, 1.0 / graph.n), r, closed=False)
    ratio = outer / inner
    qualifies = qual_mass >= floor
    bound = 2.0**exponent
    report = DoublingReport(measure_kind, bool(closed), r.tolist(), float(exponent), float(floor))
    report.total_balls = int(ratio.size)
    report.qualifying_balls = int(qualifies.sum())
    report.max_ratio_all = float(ratio.max())
    report.max_ratio = float(ratio[qualifies].max()) if qualifies.any() else 1.0
    bad = ratio > bound
    report.n_violations = int((bad & qualifies).sum())
    report.n_violations_below_floor = int((bad & ~qualifies).sum())
    for c, j in zip(*np.nonzero(bad & qualifies)):
        if len(report.violations) >= MAX_LISTED:
            break
        report.violations.append((int(centers[c]), float(r[j]), float(ratio[c, j])))
    return report


def ball_ratio_table(graph, measure_kind, r_values, closed=False, centers=None):
    """Per-ball rows ``(center, r, inner mass, outer mass, ratio)`` for plotting."""
    centers = np.arange(graph.n) if centers is None else np.asarray(centers)
    hops = sp_distance_matrix(graph, centers)
    w = graph_measure(graph, measure_kind).weights
    r = np.asarray(r_values, dtype=float)
    inner = ball_masses(hops, w, r, closed)
    outer = ball_masses(hops, w, 2 * r, closed)
    rows = []
    for c in range(centers.size):
        for j in range(r.size):
            rows.append((int(centers[c]), float(r[j]), float(inner[c, j]), float(outer[c, j]), float(outer[c, j] / inner[c, j])))
    return rows
