"""Catalog of closed manifolds with exact geometry.

Each model is a homogeneous metric measure space ``(M, d_M, mu)`` with ``mu``
the normalized Riemannian volume.  Homogeneity means every ball measure depends
only on the radius, which is what makes exact oracles possible throughout the
package.

The regularity constants (Ahlfors ``c_l``/``c_u``, doubling exponent ``v``,
curvature bound, injectivity radius, branch separation ``s0`` and curvature
radius ``r0``) are our own derivations for these concrete spaces.  Each model
re-checks its declared Ahlfors and doubling constants on a dense radius grid
at construction and keeps the outcome in :attr:`ManifoldModel.verification`.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, OutOfInjectivityError
from .rng import make_rng

ON_MANIFOLD_TOL = 1e-8
VERIFY_GRID = 20_000


def _wrap(delta, period):
    """Map differences into ``[-period/2, period/2)``."""
    return (np.asarray(delta) + 0.5 * period) % period - 0.5 * period


def _unit_circle_angle(u, v):
    """Angle between vectors along the last axis, stable near 0 and pi."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    dot = np.sum(u * v, axis=-1)
    if u.shape[-1] == 2:
        cross = np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    else:
        cross = np.linalg.norm(np.cross(u, v), axis=-1)
    return np.arctan2(cross, dot)


@dataclass(frozen=True)
class ManifoldModel:
    """Base class of catalog members.

    Subclasses fill in the geometry; the dataclass fields carry the declared
    regularity constants.
    """

    kind: str
    params: tuple
    k: int
    K: int
    curvature_bound: float
    injectivity_radius: float
    ahlfors_cl: float
    ahlfors_cu: float
    doubling_v: float
    s0: float
    r0: float
    diameter: float
    verification: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def r_bullet(self):
        if self.curvature_bound > 0:
            curv = math.pi / (2.0 * math.sqrt(self.curvature_bound))
        else:
            curv = math.inf
        return min(self.injectivity_radius / 2.0, curv)

    # geometry hooks -----------------------------------------------------
    def sample(self, n, seed):
        """Draw ``n`` i.i.d. points from ``mu``; deterministic given ``seed``."""
        if n < 1:
            raise DomainError("n must be >= 1")
        return self._sample(int(n), make_rng(seed, "sample", self.kind))

    def check_on_manifold(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.K:
            raise DomainError(f"expected ambient dimension {self.K}, got {pts.shape[-1]}")
        err = self._off_manifold(pts)
        if np.any(err > ON_MANIFOLD_TOL * max(1.0, self.diameter)):
            raise DomainError(f"point off {self.kind} by {float(err.max()):.3g}")
        return pts

    def distances_from(self, x, Y):
        """Geodesic distances from one point ``x`` to each row of ``Y``."""
        x = self.check_on_manifold(x)[0]
        Y = self.check_on_manifold(Y)
        return self._distances(x, Y)

    def geodesic_distance(self, x, y):
        return float(self.distances_from(x, np.atleast_2d(y))[0])

    def pairwise_distances(self, X):
        X = self.check_on_manifold(X)
        return np.stack([self._distances(x, X) for x in X])

    def ball_measure(self, r, x=None):
        """Exact ``mu(B_M(x, r))``; independent of ``x`` for catalog models."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0):
            raise DomainError("radius must be non-negative")
        out = self._ball_measure(r_arr)
        return float(out) if np.ndim(out) == 0 else out

    def euclidean_ball_measure(self, r):
        """``mu`` of the ambient Euclidean ball ``{y : ||x - y|| <= r}`` intersected with M."""
        if r < 0:
            raise DomainError("radius must be non-negative")
        return float(self._euclidean_ball_measure(float(r)))

    def exp_inverse(self, center, y):
        """Log map at ``center``: tangent coordinates in R^k with norm ``d_M(center, y)``."""
        c = self.check_on_manifold(center)[0]
        Y = self.check_on_manifold(y)
        d = self._distances(c, Y)
        if np.any(d >= self.injectivity_radius):
            raise OutOfInjectivityError(
                f"distance {float(d.max()):.6g} >= injectivity radius {self.injectivity_radius:.6g}"
            )
        out = self._log(c, Y, d)
        return out[0] if np.ndim(y) == 1 else out

    def exp_map(self, center, v):
        c = self.check_on_manifold(center)[0]
        V = np.atleast_2d(np.asarray(v, dtype=float))
        if V.shape[-1] != self.k:
            raise DomainError(f"tangent vectors must have {self.k} coordinates")
        out = self._exp(c, V)
        return out[0] if np.ndim(v) == 1 else out

    def metadata(self):
        return {
            "kind": self.kind,
            "params": list(self.params),
            "k": self.k,
            "K": self.K,
            "curvature_bound": self.curvature_bound,
            "injectivity_radius": self.injectivity_radius,
            "r_bullet": self.r_bullet,
            "ahlfors_cl": self.ahlfors_cl,
            "ahlfors_cu": self.ahlfors_cu,
            "doubling_v": self.doubling_v,
            "s0": self.s0,
            "r0": self.r0,
            "diameter": self.diameter,
            "constants_origin": "derived for this catalog model, not taken from the literature",
            "verification": dict(self.verification),
        }

    # declared-constant verification -------------------------------------
    def _verify(self):
        r = np.linspace(self.diameter / VERIFY_GRID, self.diameter, VERIFY_GRID)
        ratio = self._ball_measure(r) / r**self.k
        ok_ahlfors = bool(
            ratio.min() >= self.ahlfors_cl * (1 - 1e-12) and ratio.max() <= self.ahlfors_cu * (1 + 1e-12)
        )
        half = r[r <= self.diameter]
        doubling = self._ball_measure(np.minimum(2 * half, 10 * self.diameter)) / self._ball_measure(half)
        ok_doubling = bool(doubling.max() <= 2.0**self.doubling_v * (1 + 1e-12))
        result = {
            "grid_points": VERIFY_GRID,
            "ratio_min": float(ratio.min()),
            "ratio_max": float(ratio.max()),
            "doubling_max": float(doubling.max()),
            "ahlfors_ok": ok_ahlfors,
            "doubling_ok": ok_doubling,
        }
        if not (ok_ahlfors and ok_doubling):
            raise DomainError(f"declared constants of {self.kind} fail grid verification: {result}")
        self.verification.update(result)


class Circle(ManifoldModel):
    def __init__(self, R=1.0):
        R = float(R)
        if R <= 0:
            raise DomainError("radius must be positive")
        super().__init__(
            kind="circle",
            params=(R,),
            k=1,
            K=2,
            curvature_bound=0.0,
            injectivity_radius=math.pi * R,
            ahlfors_cl=1.0 / (math.pi * R),
            ahlfors_cu=1.0 / (math.pi * R),
            doubling_v=1.0,
            # every pair satisfies d_M <= pi * r0 = diameter
            s0=math.inf,
            r0=R,
            diameter=math.pi * R,
        )
        self._verify()

    @property
    def R(self):
        return self.params[0]

    def _sample(self, n, rng):
        theta = rng.uniform(0.0, 2 * math.pi, size=n)
        return self.R * np.column_stack([np.cos(theta), np.sin(theta)])

    def _off_manifold(self, pts):
        return np.abs(np.linalg.norm(pts, axis=1) - self.R)

    def _distances(self, x, Y):
        return self.R * _unit_circle_angle(x, Y)

    def _ball_measure(self, r):
        return np.minimum(r / (math.pi * self.R), 1.0)

    def _euclidean_ball_measure(self, r):
        if r >= 2 * self.R:
            return 1.0
        return self._ball_measure(2 * self.R * math.asin(r / (2 * self.R)))

    def _log(self, c, Y, d):
        cross = c[0] * Y[:, 1] - c[1] * Y[:, 0]
        dot = Y @ c
        return (self.R * np.arctan2(cross, dot))[:, None]

    def _exp(self, c, V):
        theta = math.atan2(c[1], c[0]) + V[:, 0] / self.R
        return self.R * np.column_stack([np.cos(theta), np.sin(theta)])

    def angles(self, pts):
        pts = np.atleast_2d(pts)
        return np.arctan2(pts[:, 1], pts[:, 0]) % (2 * math.pi)


class Sphere2(ManifoldModel):
    def __init__(self, R=1.0):
        R = float(R)
        if R <= 0:
            raise DomainError("radius must be positive")
        super().__init__(
            kind="sphere2",
            params=(R,),
            k=2,
            K=3,
            curvature_bound=1.0 / R**2,
            injectivity_radius=math.pi * R,
            # (1 - cos(r/R)) / (2 r^2) decreases on (0, pi R]
            ahlfors_cl=1.0 / (math.pi * R) ** 2,
            ahlfors_cu=1.0 / (4.0 * R**2),
            doubling_v=2.0,
            s0=math.inf,
            r0=R,
            diameter=math.pi * R,
        )
        self._verify()

    @property
    def R(self):
        return self.params[0]

    def _sample(self, n, rng):
        z = rng.standard_normal(size=(n, 3))
        return self.R * z / np.linalg.norm(z, axis=1, keepdims=True)

    def _off_manifold(self, pts):
        return np.abs(np.linalg.norm(pts, axis=1) - self.R)

    def _distances(self, x, Y):
        return self.R * _unit_circle_angle(x, Y)

    def _ball_measure(self, r):
        return np.sin(0.5 * np.minimum(r / self.R, math.pi)) ** 2

    def _euclidean_ball_measure(self, r):
        if r >= 2 * self.R:
            return 1.0
        return self._ball_measure(2 * self.R * math.asin(r / (2 * self.R)))

    def tangent_basis(self, c):
        """Deterministic orthonormal basis of the tangent plane at ``c``."""
        u = c / np.linalg.norm(c)
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(u)))] = 1.0
        e1 = axis - (axis @ u) * u
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(u, e1)
        return e1, e2

    def _log(self, c, Y, d):
        e1, e2 = self.tangent_basis(c)
        tang = Y - np.outer(Y @ c / self.R**2, c)
        norm = np.linalg.norm(tang, axis=1)
        scale = np.divide(d, norm, out=np.zeros_like(d), where=norm > 0)
        return np.column_stack([tang @ e1, tang @ e2]) * scale[:, None]

    def _exp(self, c, V):
        e1, e2 = self.tangent_basis(c)
        rho = np.linalg.norm(V, axis=1)
        direction = np.outer(V[:, 0], e1) + np.outer(V[:, 1], e2)
        unit = np.divide(direction, rho[:, None], out=np.zeros_like(direction), where=rho[:, None] > 0)
        ang = rho / self.R
        return np.cos(ang)[:, None] * c[None, :] + self.R * np.sin(ang)[:, None] * unit


class FlatTorus(ManifoldModel):
    """Flat torus ``[0, L1) x [0, L2)`` embedded in R^4 as a product of two circles."""

    def __init__(self, L1=1.0, L2=1.0):
        L1, L2 = float(L1), float(L2)
        if L1 <= 0 or L2 <= 0:
            raise DomainError("side lengths must be positive")
        diam = 0.5 * math.hypot(L1, L2)
        r0 = min(L1, L2) / (2 * math.pi)
        super().__init__(
            kind="flat_torus",
            params=(L1, L2),
            k=2,
            K=4,
            curvature_bound=0.0,
            injectivity_radius=min(L1, L2) / 2.0,
            ahlfors_cl=1.0 / diam**2,
            ahlfors_cu=math.pi / (L1 * L2),
            doubling_v=2.0,
            s0=_torus_branch_separation(L1, L2, r0),
            r0=r0,
            diameter=diam,
        )
        self._verify()

    @property
    def L(self):
        return np.array(self.params)

    @property
    def radii(self):
        return self.L / (2 * math.pi)

    def embed(self, uv):
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        a = self.radii
        th = uv / a
        return np.column_stack(
            [a[0] * np.cos(th[:, 0]), a[0] * np.sin(th[:, 0]), a[1] * np.cos(th[:, 1]), a[1] * np.sin(th[:, 1])]
        )

    def intrinsic(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        a = self.radii
        t1 = np.arctan2(pts[:, 1], pts[:, 0]) % (2 * math.pi)
        t2 = np.arctan2(pts[:, 3], pts[:, 2]) % (2 * math.pi)
        return np.column_stack([a[0] * t1, a[1] * t2])

    def _sample(self, n, rng):
        uv = rng.uniform(0.0, 1.0, size=(n, 2)) * self.L
        return self.embed(uv)

    def _off_manifold(self, pts):
        a = self.radii
        return np.maximum(
            np.abs(np.hypot(pts[:, 0], pts[:, 1]) - a[0]), np.abs(np.hypot(pts[:, 2], pts[:, 3]) - a[1])
        )

    def _delta(self, c, Y):
        return _wrap(self.intrinsic(Y) - self.intrinsic(c)[0], self.L)

    def _distances(self, x, Y):
        return np.linalg.norm(self._delta(x, Y), axis=1)

    def _ball_measure(self, r):
        return _rect_disc_fraction(r, 0.5 * self.params[0], 0.5 * self.params[1])

    def _euclidean_ball_measure(self, r):
        a1, a2 = self.radii
        L1, L2 = self.params

        def half_width(d1):
            rest = r * r - (2 * a1 * math.sin(d1 / (2 * a1))) ** 2
            if rest <= 0:
                return 0.0
            s = math.sqrt(rest) / (2 * a2)
            return 2 * a2 * math.asin(min(s, 1.0))

        val, _ = integrate.quad(half_width, 0.0, L1 / 2, limit=200, epsabs=1e-13, epsrel=1e-11)
        return min(4 * val / (L1 * L2), 1.0)

    def _log(self, c, Y, d):
        return self._delta(c, Y)

    def _exp(self, c, V):
        return self.embed(self.intrinsic(c)[0] + V)


def _rect_disc_fraction(r, a, b):
    """Area fraction of ``{|u|<=a, |v|<=b, u^2+v^2<r^2}`` in the ``2a x 2b`` box."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        if ri <= 0:
            out[i] = 0.0
            continue
        top = min(a, ri)
        u0 = math.sqrt(max(ri * ri - b * b, 0.0))
        u0 = min(u0, top)

        def F(u):
            return 0.5 * (u * math.sqrt(max(ri * ri - u * u, 0.0)) + ri * ri * math.asin(min(u / ri, 1.0)))

        quarter = b * u0 + F(top) - F(u0)
        out[i] = min(quarter / (a * b), 1.0)
    return float(out[0]) if scalar else out


def _torus_branch_separation(L1, L2, r0):
    """Smallest ambient chord among pairs with ``d_M > pi * r0``.

    Chord length grows in each wrapped intrinsic coordinate, so the infimum is
    attained on the circle ``|delta| = pi * r0``; minimise over its angle.
    """
    a = np.array([L1, L2]) / (2 * math.pi)
    rho = math.pi * r0
    half = np.array([L1, L2]) / 2

    def chord(phi):
        d = np.minimum(rho * np.array([math.cos(phi), math.sin(phi)]), half)
        return float(np.sqrt(np.sum((2 * a * np.sin(d / (2 * a))) ** 2)))

    grid = np.linspace(0.0, math.pi / 2, 2001)
    vals = np.array([chord(p) for p in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(chord, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return min(float(res.fun), float(vals[i]))


CATALOG = {"circle": Circle, "sphere2": Sphere2, "flat_torus": FlatTorus}


def make_model(kind, params=()):
    """Instantiate a catalog member from its kind name and numeric parameters."""
    try:
        cls = CATALOG[kind]
    except KeyError:
        raise DomainError(f"unknown manifold kind {kind!r}; choose from {sorted(CATALOG)}") from None
    return cls(*[float(p) for p in params])


# functional aliases ------------------------------------------------------

def sample(model, n, seed):
    return model.sample(n, seed)


def geodesic_distance(model, x, y):
    return model.geodesic_distance(x, y)


def ball_measure(model, x, r):
    return model.ball_measure(r, x)


def exp_inverse(model, center, y):
    return model.exp_inverse(center, y)


def write_points_csv(path, points):
    """One row per point, ambient coordinates with 17 significant digits."""
    np.savetxt(path, np.asarray(points, dtype=float), fmt="%.17g", delimiter=",")
