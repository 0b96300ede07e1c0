"""Binomial tail bounds, degree and ball-count intervals, and the uniform
square-root deviation between the empirical measure and ``mu`` on balls.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

CHERNOFF_LOWER = "chernoff_lower"
CHERNOFF_UPPER = "chernoff_upper"
OKAMOTO_UP = "okamoto_up"
OKAMOTO_DOWN = "okamoto_down"


@dataclass(frozen=True)
class TailBound:
    """A tail probability bound together with the arguments it was evaluated at."""

    kind: str
    n: int
    p: float
    delta: float

    @property
    def value(self):
        if self.kind in (CHERNOFF_LOWER, CHERNOFF_UPPER):
            return chernoff_bound(self.kind, self.n, self.p, self.delta)
        direction = "up" if self.kind == OKAMOTO_UP else "down"
        return okamoto_bound(direction, self.n, self.delta)


def chernoff_bound(kind, n, p, delta):
    """``exp(-delta^2 n p / 3)`` bounding ``P(N <= (1-delta) n p)`` or ``P(N >= (1+delta) n p)``.

    ``N ~ Bin(n, p)``.  The lower tail needs ``delta in (0, 1)``, the upper
    tail ``delta in (0, 1]``.
    """
    if kind not in (CHERNOFF_LOWER, CHERNOFF_UPPER):
        raise DomainError(f"unknown Chernoff kind {kind!r}")
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    if n < 0:
        raise DomainError("n must be non-negative")
    hi_ok = delta < 1.0 if kind == CHERNOFF_LOWER else delta <= 1.0
    if not (delta > 0.0 and hi_ok):
        raise DomainError(f"delta={delta} outside the admissible range for {kind}")
    return math.exp(-delta * delta * n * p / 3.0)


def okamoto_bound(direction, m, delta):
    """Okamoto tails for the square root of a binomial proportion.

    ``P(sqrt(p_hat) >= sqrt(p) + delta) <= exp(-2 m delta^2)`` (``"up"``) and
    ``P(sqrt(p) >= sqrt(p_hat) + delta) <= exp(-m delta^2)`` (``"down"``).
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    if not delta > 0:
        raise DomainError("delta must be positive")
    if direction == "up":
        return math.exp(-2.0 * m * delta * delta)
    if direction == "down":
        return math.exp(-m * delta * delta)
    raise DomainError(f"direction must be 'up' or 'down', got {direction!r}")


class Interval(NamedTuple):
    lo: float
    hi: float
    failure_prob: float


def degree_bounds(n, delta, m_lo, m_hi):
    """Degree thresholds ``(1-delta)(n-1) m_lo`` and ``(1+delta)(n-1) m_hi``.

    ``m_lo``/``m_hi`` bound the mass of the closed Euclidean ``eps``-ball
    around any point.  ``failure_prob`` is the bound for one side,
    ``n exp(-delta^2 (n-1) m_lo / 3)``; both sides together fail with
    probability at most twice that.
    """
    if not 0 < m_lo <= m_hi <= 1:
        raise DomainError("need 0 < m_lo <= m_hi <= 1")
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    if n < 2:
        raise DomainError("n must be >= 2")
    lo = (1 - delta) * (n - 1) * m_lo
    hi = (1 + delta) * (n - 1) * m_hi
    return Interval(lo, hi, n * math.exp(-delta * delta * (n - 1) * m_lo / 3.0))


def ahlfors_edge_masses(model, epsilon, lam1):
    """Masses ``[c_l eps^k, c_u (1-lam1)^-k eps^k]`` that contain every closed Euclidean eps-ball mass."""
    k = model.k
    return model.ahlfors_cl * epsilon**k, model.ahlfors_cu * (1 - lam1) ** (-k) * epsilon**k


def ball_count_bounds(model, r, n, delta, center_kind, epsilon=None, lam1=None, lam2=None, p1=0.0):
    """Interval for the normalized point count of a ball and its failure probability.

    ``fixed``: ``n_B / n`` for a deterministic centre, failure ``2 exp(-delta^2 n mu(B) / 3)``.
    ``vertex``: ``(n_B - 1)/(n - 1)`` for a sample point as centre, failure
    ``2 exp(-delta^2 (n-1) c_l r^k / 3)``.
    ``sp_ball``: hop ball of radius ``r >= 2`` around a sample point, with
    interval ``[(1-delta) c_l (eps r / (8 (1+lam2)))^k, (1+delta) c_u (eps r / (1-lam1))^k]``
    and failure ``2 exp(-delta^2 (n-1) c_l (eps r / (8 (1+lam2)))^k / 3) + p1``.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    k, cl, cu = model.k, model.ahlfors_cl, model.ahlfors_cu
    if center_kind == "sp_ball":
        if epsilon is None or lam1 is None or lam2 is None:
            raise DomainError("sp_ball bounds need epsilon, lam1 and lam2")
        if r < 2:
            raise DomainError("sp_ball bounds need r >= 2")
        inner = epsilon * r / (8.0 * (1 + lam2))
        lo = (1 - delta) * cl * inner**k
        hi = (1 + delta) * cu * (epsilon * r / (1 - lam1)) ** k
        fail = 2 * math.exp(-delta * delta * (n - 1) * cl * inner**k / 3.0) + p1
        return Interval(lo, hi, fail)
    if not 0 < r <= model.diameter:
        raise DomainError("r must lie in (0, diameter]")
    lo = (1 - delta) * cl * r**k
    hi = (1 + delta) * cu * r**k
    if center_kind == "fixed":
        fail = 2 * math.exp(-delta * delta * n * model.ball_measure(r) / 3.0)
    elif center_kind == "vertex":
        fail = 2 * math.exp(-delta * delta * (n - 1) * cl * r**k / 3.0)
    else:
        raise DomainError(f"unknown center kind {center_kind!r}")
    return Interval(lo, hi, fail)


# uniform square-root deviation --------------------------------------------

def sqrt_deviation_bound(n, p2, union_factor=4):
    """``2 sqrt(ln(union_factor n^2 / p2) / n)``; the stated bound uses 4, its derivation 3."""
    if not 0 < p2 <= 0.5:
        raise DomainError("p2 must lie in (0, 0.5]")
    if n < 4:
        raise DomainError("n must be >= 4")
    return 2.0 * math.sqrt(math.log(union_factor * n * n / p2) / n)


@dataclass
class DeviationStatistic:
    sup_value: float
    per_center_sup: np.ndarray
    argmax_r: np.ndarray
    bound: float
    bound_3n2: float
    p2: float
    corollary_holds: bool

    @property
    def within_bound(self):
        return self.sup_value <= self.bound

    def to_dict(self):
        return {
            "sup_value": self.sup_value,
            "bound": self.bound,
            "bound_3n2": self.bound_3n2,
            "p2": self.p2,
            "within_bound": self.within_bound,
            "within_bound_3n2": self.sup_value <= self.bound_3n2,
            "corollary_holds": self.corollary_holds,
            "n_centers": int(self.per_center_sup.size),
        }


def center_sqrt_deviation(dist, ball_measure):
    """Exact ``sup_{r>0} |sqrt(eta_1(B(x, r))) - sqrt(mu(B(x, r)))|`` for one centre.

    ``dist`` holds the distances from the centre to all ``n`` sample points
    (itself included) and ``ball_measure`` maps radii to ``mu``.  Between
    consecutive breakpoints the open-ball count is constant while ``mu``
    increases, so the supremum is attained or approached at a breakpoint: from
    the right as the closed-ball statistic, or at the breakpoint itself as the
    open-ball statistic.  Returns ``(sup, argmax_r, breakpoints, eta_open,
    eta_closed, mu)``.
    """
    d = np.sort(np.asarray(dist, dtype=float))
    n = d.size
    b = np.unique(d)
    eta_open = np.searchsorted(d, b, side="left") / n
    eta_closed = np.searchsorted(d, b, side="right") / n
    mu = np.asarray(ball_measure(b), dtype=float)
    t_open = np.abs(np.sqrt(eta_open) - np.sqrt(mu))
    t_open[b <= 0] = 0.0  # radius must be positive
    t_closed = np.sqrt(eta_closed) - np.sqrt(mu)
    i_open, i_closed = int(np.argmax(t_open)), int(np.argmax(t_closed))
    if t_open[i_open] >= t_closed[i_closed]:
        sup, arg = float(t_open[i_open]), float(b[i_open])
    else:
        sup, arg = float(t_closed[i_closed]), float(b[i_closed])
    return sup, arg, b, eta_open, eta_closed, mu


def uniform_sqrt_deviation(points, model, p2):
    """Supremum over all sample centres and all radii of the square-root deviation."""
    pts = model.check_on_manifold(points)
    n = pts.shape[0]
    bound = sqrt_deviation_bound(n, p2, 4)
    bound3 = sqrt_deviation_bound(n, p2, 3)
    delta2 = 4.0 * math.log(4 * n * n / p2) / n
    sups = np.empty(n)
    args = np.empty(n)
    corollary = True
    for i in range(n):
        sups[i], args[i], _, e_open, e_closed, mu = center_sqrt_deviation(
            model.distances_from(pts[i], pts), model.ball_measure
        )
        for eta in (e_open, e_closed):
            corollary &= bool(np.all(eta <= 1.5 * mu + 3 * delta2) and np.all(mu <= 1.5 * eta + 3 * delta2))
    return DeviationStatistic(float(sups.max()), sups, args, bound, bound3, float(p2), corollary)


def write_deviation_csv(path, stat):
    with open(path, "w") as fh:
        fh.write("center_index,sup_T,argmax_r,bound\n")
        for i, (s, a) in enumerate(zip(stat.per_center_sup, stat.argmax_r)):
            fh.write(f"{i},{float(s)!r},{float(a)!r},{float(stat.bound)!r}\n")
