"""Observation sets with exact membership predicates.

Variants: full space, spherical shells ("|x| in I" for an interval union),
finite unions of angular arcs (d = 2), the two perpendicular cones, unions
of rays (d = 1), thickenings, puncturings by a centered ball, and finite
unions.  Membership is closed-form for every variant; thickening the
conical variants records the exclusion radius near the origin where the
angular widening degenerates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .intervals import IntervalUnion

TWO_PI = 2.0 * math.pi


class UnsupportedSetError(ValueError):
    """Raised for set algebra with no exact closed form (by design)."""


def _pts(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    return a


@dataclass(frozen=True)
class FullSpace:
    dimension: int = 2

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        return np.ones(len(_pts(x)), dtype=bool)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(len(_pts(x)))


@dataclass(frozen=True)
class Spherical:
    """omega(I) = {x : |x| in I}."""

    radii: IntervalUnion
    dimension: int = 2

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        r = np.sqrt((pts * pts).sum(axis=1))
        return self.radii.contains_many(r)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        r = np.sqrt((pts * pts).sum(axis=1))
        return np.fromiter((self.radii.distance(v) for v in r), dtype=float, count=len(r))


def _norm_arc(a: float, b: float) -> tuple[float, float]:
    a %= TWO_PI
    b %= TWO_PI
    return a, b


@dataclass(frozen=True)
class ConicalArcs:
    """{x != 0 : angle(x) in one of the open arcs}; d = 2 only."""

    arcs: tuple  # ((a, b), ...) angles, each arc traversed ccw from a to b

    def __post_init__(self):
        object.__setattr__(
            self, "arcs", tuple(_norm_arc(float(a), float(b)) for a, b in self.arcs)
        )

    @property
    def dimension(self) -> int:
        return 2

    def angle_in(self, theta: np.ndarray) -> np.ndarray:
        th = np.mod(theta, TWO_PI)
        inside = np.zeros(th.shape, dtype=bool)
        for a, b in self.arcs:
            if a <= b:
                inside |= (th > a) & (th < b)
            else:
                inside |= (th > a) | (th < b)
        return inside

    def total_length(self) -> float:
        return sum((b - a) % TWO_PI for a, b in self.arcs)

    def angular_distance(self, theta: np.ndarray) -> np.ndarray:
        th = np.mod(theta, TWO_PI)
        best = np.full(th.shape, math.inf)
        for a, b in self.arcs:
            for edge in (a, b):
                d = np.abs(th - edge)
                d = np.minimum(d, TWO_PI - d)
                best = np.minimum(best, d)
        best[self.angle_in(th)] = 0.0
        return best

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        return (r > 0) & self.angle_in(th)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        # distance to a cone over the arcs: r*sin(angular distance), capped
        # by r itself (the vertex is always reachable)
        ang = self.angular_distance(th)
        return np.minimum(r, r * np.sin(np.minimum(ang, math.pi / 2)))


@dataclass(frozen=True)
class TwoCones:
    """omega(eps) = C1 u C2 with C1 = {|x2'| < tan(eps/2) x1'} and
    C2 = {|x1'| < tan(eps/2) x2'} in the basis rotated by ``basis_angle``."""

    epsilon: float
    basis_angle: float = 0.0

    def __post_init__(self):
        if not 0 < self.epsilon < math.pi / 2:
            raise ValueError("epsilon must be in (0, pi/2)")

    @property
    def dimension(self) -> int:
        return 2

    def _rotated(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c, s = math.cos(self.basis_angle), math.sin(self.basis_angle)
        u1 = c * pts[:, 0] + s * pts[:, 1]
        u2 = -s * pts[:, 0] + c * pts[:, 1]
        return u1, u2

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        u1, u2 = self._rotated(_pts(x))
        t = math.tan(self.epsilon / 2.0)
        return (np.abs(u2) < t * u1) | (np.abs(u1) < t * u2)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        u1, u2 = self._rotated(pts)
        r = np.hypot(u1, u2)
        th = np.arctan2(u2, u1)
        half = self.epsilon / 2.0
        d1 = np.abs(th) - half  # angular distance to cone around axis 1
        w = np.abs(th - math.pi / 2.0)
        d2 = np.minimum(w, TWO_PI - w) - half
        ang = np.maximum(np.minimum(d1, d2), 0.0)
        return np.minimum(r, r * np.sin(np.minimum(ang, math.pi / 2)))


@dataclass(frozen=True)
class HalfLineCone:
    """d = 1: union of rays, encoded as {x : sign(x)*x in rays[sign]}."""

    positive: Optional[float] = None  # ray (a, inf) on the positive side
    negative: Optional[float] = None  # ray (-inf, -a) on the negative side

    @property
    def dimension(self) -> int:
        return 1

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)[:, 0]
        inside = np.zeros(pts.shape, dtype=bool)
        if self.positive is not None:
            inside |= pts > self.positive
        if self.negative is not None:
            inside |= pts < -self.negative
        return inside

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)[:, 0]
        d = np.full(pts.shape, math.inf)
        if self.positive is not None:
            d = np.minimum(d, np.maximum(self.positive - pts, 0.0))
        if self.negative is not None:
            d = np.minimum(d, np.maximum(pts + self.negative, 0.0))
        return d


@dataclass(frozen=True)
class Thickened:
    inner: "ObservationSet"
    R: float
    # conical inner sets also get an exclusion radius near the origin where
    # the angular widening is meaningless (|x| <= r0 is included wholesale)
    r0: float = 0.0

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        _distance_capable(self.inner)

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        return self.inner.signed_distance(_pts(x)) < self.R

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(self.inner.signed_distance(_pts(x)) - self.R, 0.0)


@dataclass(frozen=True)
class Punctured:
    inner: "ObservationSet"
    K: float  # removes the closed ball of radius K

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be >= 0")

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        r = np.sqrt((pts * pts).sum(axis=1))
        return self.inner.contains_many(pts) & (r > self.K)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        # exact for spherical inners; for others this is a lower bound used
        # only by the mollifier, where the sandwich still holds
        pts = _pts(x)
        r = np.sqrt((pts * pts).sum(axis=1))
        return np.maximum(self.inner.signed_distance(pts), np.maximum(self.K - r, 0.0))


@dataclass(frozen=True)
class Union:
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise ValueError("empty union")
        dims = {p.dimension for p in self.parts}
        if len(dims) != 1:
            raise ValueError("union parts must share the dimension")

    @property
    def dimension(self) -> int:
        return self.parts[0].dimension

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        inside = self.parts[0].contains_many(pts)
        for p in self.parts[1:]:
            inside |= p.contains_many(pts)
        return inside

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        pts = _pts(x)
        variants = {type(p) for p in self.parts}
        if len(variants) > 1:
            raise UnsupportedSetError(
                "distance to a union of mixed variants is not closed-form; "
                "thicken the parts individually instead"
            )
        d = self.parts[0].signed_distance(pts)
        for p in self.parts[1:]:
            d = np.minimum(d, p.signed_distance(pts))
        return d


ObservationSet = (
    FullSpace | Spherical | ConicalArcs | TwoCones | HalfLineCone | Thickened | Punctured | Union
)


def _distance_capable(s: ObservationSet) -> None:
    if isinstance(s, Union):
        variants = {type(p) for p in s.parts}
        if len(variants) > 1:
            raise UnsupportedSetError(
                "thickening a union of mixed variants is rejected by design"
            )
        for p in s.parts:
            _distance_capable(p)


def contains(s: ObservationSet, x) -> bool:
    """Exact membership of a single point."""
    return bool(s.contains_many(np.asarray(x, dtype=float))[0])


def thicken(s: ObservationSet, R: float) -> ObservationSet:
    """The R-neighbourhood, kept representable per variant."""
    if R <= 0:
        raise ValueError("R must be positive")
    if isinstance(s, FullSpace):
        return s
    if isinstance(s, Spherical):
        return Spherical(s.radii.thicken(R), s.dimension)
    if isinstance(s, (ConicalArcs, TwoCones)):
        if isinstance(s, TwoCones):
            gap = math.pi / 2.0 - s.epsilon
        else:
            gap = max(TWO_PI - s.total_length(), 1e-6)
        r0 = 2.0 * R / gap
        return Thickened(s, R, r0=r0)
    if isinstance(s, HalfLineCone):
        pos = None if s.positive is None else max(0.0, s.positive - R)
        neg = None if s.negative is None else max(0.0, s.negative - R)
        return HalfLineCone(pos, neg)
    _distance_capable(s)
    return Thickened(s, R)


# -- mollified cutoff ------------------------------------------------------------


def _smoothstep(u: np.ndarray) -> np.ndarray:
    """C^inf ramp: 1 on (-inf, 1/2], 0 on [1, inf), monotone in between."""
    out = np.zeros_like(u)
    out[u <= 0.5] = 1.0
    mid = (u > 0.5) & (u < 1.0)
    v = (u[mid] - 0.5) / 0.5  # rescale transition zone to (0, 1)
    # standard exp-based partition-of-unity bump
    f = np.exp(-1.0 / v)
    g = np.exp(-1.0 / (1.0 - v))
    out[mid] = g / (f + g)
    return out


SMOOTHSTEP_SLOPE = 4.0  # sup of |S'|: the bump derivative peaks at 2, doubled by the (1/2, 1) rescale


def mollified_cutoff(s: ObservationSet, R: float, x) -> float:
    """Smooth ramp a_R(x) = S(dist(x, omega)/R): equals 1 inside omega, 0 at
    distance >= R, sandwiched between the indicators of the R/2- and
    R-thickenings, with |grad| <= C/R."""
    if R < 1:
        raise ValueError("R must be >= 1")
    d = s.signed_distance(np.asarray(x, dtype=float))
    return float(_smoothstep(d / R)[0])


def mollified_cutoff_many(s: ObservationSet, R: float, x: np.ndarray) -> np.ndarray:
    if R < 1:
        raise ValueError("R must be >= 1")
    return _smoothstep(s.signed_distance(x) / R)


# -- angular lower density ---------------------------------------------------------


def lower_density(arcs: ConicalArcs, theta: float, r: float) -> float:
    """Arc-length fraction of the arcs inside the geodesic ball B_r(theta)
    on the circle; exact for d = 2."""
    if not 0 < r < 2:
        raise ValueError("r must be in (0, 2)")
    # geodesic ball of radius r in the chord metric <-> angular half-width
    half = 2.0 * math.asin(min(1.0, r / 2.0))
    lo, hi = theta - half, theta + half
    total = 0.0
    for a, b in arcs.arcs:
        # unroll the arc across periods overlapping [lo, hi]
        length = (b - a) % TWO_PI
        k0 = math.floor((lo - a) / TWO_PI)
        for k in (k0, k0 + 1, k0 + 2):
            aa = a + k * TWO_PI
            total += max(0.0, min(aa + length, hi) - max(aa, lo))
    return total / (2.0 * half)


def lower_density_liminf(
    arcs: ConicalArcs, theta: float, r_min: float = 1e-4, grid: int = 64
) -> float:
    """liminf over r of the density, estimated by the minimum over a
    geometric r-grid down to r_min."""
    rs = np.geomspace(1.0, r_min, grid)
    return min(lower_density(arcs, theta, float(r)) for r in rs)
