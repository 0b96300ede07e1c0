"""Random-walk Laplacian, heat kernel, sub-Gaussian envelope fits and
spectral graph wavelets.

``L = I - D^-1 A`` and its symmetric form ``L' = D^1/2 L D^-1/2 = I - D^-1/2 A D^-1/2``.
With ``L' = U diag(lam) U^T`` the heat semigroup is
``P_t = exp(-t L) = D^-1/2 U exp(-t lam) U^T D^1/2`` and the heat kernel is
``Q_t = P_t D^-1``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DegreeError, DomainError, FrameError
from .geograph import require_connected, sp_distance_matrix

EIGEN_CAP = 2500
ZERO_KERNEL_TOL = 1e-300


def laplacians(graph):
    """Dense ``(L, L', D)`` with ``D`` the degree vector."""
    deg = graph.degrees.astype(float)
    if np.any(deg == 0):
        raise DegreeError(f"{int((deg == 0).sum())} isolated vertices")
    A = graph.adjacency().toarray()
    L = np.eye(graph.n) - A / deg[:, None]
    s = np.sqrt(deg)
    Ls = np.eye(graph.n) - A / np.outer(s, s)
    return L, 0.5 * (Ls + Ls.T), deg


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degrees: np.ndarray

    @property
    def n(self):
        return self.degrees.size

    def apply(self, fn):
        """``fn(L')`` as a dense matrix."""
        U = self.eigenvectors
        return (U * fn(self.eigenvalues)) @ U.T

    def heat_semigroup(self, t):
        if t < 0:
            raise DomainError("t must be non-negative")
        s = np.sqrt(self.degrees)
        return self.apply(lambda lam: np.exp(-t * lam)) / s[:, None] * s[None, :]

    def heat_kernel(self, t):
        if t < 0:
            raise DomainError("t must be non-negative")
        s = np.sqrt(self.degrees)
        Q = self.apply(lambda lam: np.exp(-t * lam)) / np.outer(s, s)
        return 0.5 * (Q + Q.T)


def spectral_decomposition(graph, cap=EIGEN_CAP):
    """Full eigendecomposition of ``L'``; refuses graphs above ``cap`` vertices."""
    if graph.n > cap:
        raise DomainError(f"dense eigensolve capped at n={cap}, got n={graph.n}")
    _, Ls, deg = laplacians(graph)
    lam, U = linalg.eigh(Ls)
    return SpectralDecomposition(np.clip(lam, 0.0, 2.0), U, deg)


def heat_kernel(graph, t, spectral=None):
    """``(P_t, Q_t)`` on a connected graph."""
    require_connected(graph)
    sd = spectral_decomposition(graph) if spectral is None else spectral
    return sd.heat_semigroup(t), sd.heat_kernel(t)


# sub-Gaussian envelope ---------------------------------------------------------

@dataclass
class EnvelopeReport:
    slope: float
    intercept: float
    c1: float
    c2: float
    max_positive_residual: float
    n_points: int
    n_dropped: int
    spread_ok: bool
    dropped: list = field(default_factory=list)

    @property
    def verdict(self):
        return "pass" if self.spread_ok and self.slope < 0 else "fail"

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "c1_hat": self.c1,
            "c2_hat": self.c2,
            "max_positive_residual": self.max_positive_residual,
            "n_points": self.n_points,
            "n_dropped": self.n_dropped,
            "spread_ok": self.spread_ok,
            "verdict": self.verdict,
        }


def envelope_table(graph, t_values, sources, spectral=None):
    """Rows ``(x, y, d_sp, t, Q_t(x, y), vol(B(x, ceil(sqrt t))))`` for all ``y`` with ``d_sp <= t``."""
    require_connected(graph)
    sd = spectral_decomposition(graph) if spectral is None else spectral
    sources = np.asarray(sources, dtype=np.int64)
    hops = sp_distance_matrix(graph, sources)
    deg = graph.degrees.astype(float)
    rows = []
    for t in t_values:
        Q = sd.heat_kernel(float(t))
        rad = math.ceil(math.sqrt(t))
        for i, x in enumerate(sources):
            vol = deg[hops[i] <= rad].sum()
            ys = np.nonzero(hops[i] <= t)[0]
            for y in ys:
                rows.append((int(x), int(y), float(hops[i, y]), float(t), float(Q[x, y]), float(vol)))
    return rows


def subgaussian_envelope(graph, t_values, sources, spectral=None):
    """Least-squares fit of ``ln(Q_t vol)`` against ``d_sp^2 / t``.

    The slope estimates ``-c2`` and the intercept ``ln c1``.  Pairs whose
    kernel value vanishes numerically are dropped and recorded.  The fit needs
    at least three distinct hop distances.
    """
    rows = envelope_table(graph, t_values, sources, spectral)
    xs, ys, hop_values, dropped = [], [], set(), []
    for x, y, d, t, q, vol in rows:
        if q <= ZERO_KERNEL_TOL:
            dropped.append((x, y, t))
            continue
        xs.append(d * d / t)
        ys.append(math.log(q * vol))
        hop_values.add(d)
    xs, ys = np.array(xs), np.array(ys)
    # spread coming only from the t grid does not probe the distance decay
    spread = xs.size >= 3 and len(hop_values) >= 3
    if not spread:
        return EnvelopeReport(math.nan, math.nan, math.nan, math.nan, math.nan, xs.size, len(dropped), False, dropped)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return EnvelopeReport(
        float(slope), float(intercept), float(math.exp(intercept)), float(-slope),
        float(resid.max()), int(xs.size), len(dropped), True, dropped[:100],
    )


# wavelets ----------------------------------------------------------------------

def cos2_band(x):
    """``cos^2(pi/2 log2 x)`` on ``[1/2, 2]``, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x >= 0.5) & (x <= 2.0)
    out[m] = np.cos(0.5 * math.pi * np.log2(x[m])) ** 2
    return out


@dataclass
class WaveletBank:
    """Multipliers ``zeta_l(lambda_j)`` per level; key ``None`` is the low-pass.

    Kernels are formed on demand and cached.
    """

    spectral: SpectralDecomposition
    levels: list
    multipliers: dict
    frame_bounds: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    def kernel(self, level):
        if level not in self._cache:
            m = self.multipliers[level]
            self._cache[level] = self.spectral.apply(lambda _lam: np.sqrt(m))
        return self._cache[level]

    @property
    def kernels(self):
        return {l: self.kernel(l) for l in self.multipliers}

    def frame_sum(self):
        return sum(self.multipliers.values())


def wavelet_bank(spectral, levels, band=cos2_band, lowpass=True):
    """Kernels ``K_l = sqrt(zeta(2^-l L'))`` for each level, plus an optional low-pass.

    The low-pass multiplier is ``1 - sum_l zeta(2^-l x)`` below the lowest
    band centre and zero above it, so that the multipliers sum to one on the
    whole spectrum when the levels reach the top eigenvalue.
    """
    lam = spectral.eigenvalues
    levels = [int(l) for l in levels]
    mult = {l: band(lam / 2.0**l) for l in levels}
    if lowpass and levels:
        low = np.clip(1.0 - sum(mult.values()), 0.0, 1.0)
        low[lam > 2.0 ** min(levels)] = 0.0
        mult[None] = low
    total = sum(mult.values()) if mult else np.zeros_like(lam)
    if np.any(total <= 0):
        j = int(np.argmin(total))
        raise FrameError(f"eigenvalue {lam[j]:.6g} is not covered by any level")
    return WaveletBank(spectral, levels, mult, (float(total.min()), float(total.max())))


def default_levels(spectral):
    """Levels from the one covering the smallest positive eigenvalue up to 1."""
    lam = spectral.eigenvalues
    pos = lam[lam > 1e-10]
    if pos.size == 0:
        raise FrameError("no positive eigenvalue")
    return list(range(math.floor(math.log2(pos.min())), 2))


def mid_band_level(spectral, levels=None):
    """Level whose band is centred on the median positive eigenvalue.

    The band of level ``l`` peaks at ``2^l``; centring it on the median splits
    the spectrum into equally many lower and higher frequencies.
    """
    lam = spectral.eigenvalues
    pos = lam[lam > 1e-10]
    if pos.size == 0:
        raise FrameError("no positive eigenvalue")
    lvl = int(round(math.log2(float(np.median(pos)))))
    if levels is not None:
        lvl = min(max(lvl, min(levels)), max(levels))
    return lvl


def localization_profile(bank, level, hops, epsilon, bin_edges=(0, 1, 2, 4, 8, 16), sources=None):
    """Mean and max of ``|K_l(x, y)|`` per bin of ``s = eps d_sp(x, y) / 2^l``.

    ``hops`` holds the hop distances from ``sources`` (rows) to all vertices.
    Bins are ``[a, b)`` except the first, which is closed at zero.
    """
    K = bank.kernel(level)
    sources = np.arange(K.shape[0]) if sources is None else np.asarray(sources)
    s = epsilon * hops / 2.0**level
    vals = np.abs(K[sources])
    out = []
    for a, b in zip(bin_edges[:-1], bin_edges[1:]):
        m = (s >= a) & (s < b)
        out.append({
            "lo": float(a), "hi": float(b), "count": int(m.sum()),
            "mean": float(vals[m].mean()) if m.any() else math.nan,
            "max": float(vals[m].max()) if m.any() else math.nan,
        })
    return out


def localization_ratio(profile, near=(0, 1), far=(2, 4)):
    def mean_over(lo, hi):
        rows = [p for p in profile if p["lo"] >= lo and p["hi"] <= hi and p["count"]]
        tot = sum(p["count"] for p in rows)
        return sum(p["mean"] * p["count"] for p in rows) / tot if tot else math.nan

    return mean_over(*far) / mean_over(*near)


def write_envelope_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("x,y,d_sp,t_or_level,value\n")
        for x, y, d, t, q, _ in rows:
            fh.write(f"{x},{y},{float(d)!r},{float(t)!r},{float(q)!r}\n")


def write_localization_csv(path, bank, level, hops, sources):
    K = bank.kernel(level)
    with open(path, "w") as fh:
        fh.write("x,y,d_sp,t_or_level,value\n")
        for i, x in enumerate(sources):
            for y in range(K.shape[0]):
                fh.write(f"{int(x)},{y},{float(hops[i, y])!r},{level},{float(K[x, y])!r}\n")
