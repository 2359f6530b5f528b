"""Unions of open intervals on [0, inf) with exact measure arithmetic.

The core object, :class:`IntervalUnion`, stores a finite list of disjoint
sorted intervals plus an optional tail rule that generates intervals beyond
the explicit list (arithmetic progressions, geometric annuli, or shrunk
versions of those).  Window-overlap measures are computed exactly, which is
what the density threshold ``kappa_star`` and the 1D weak-thickness estimate
are built on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class ArithmeticTail:
    """Intervals (start + n*gap, start + n*gap + width + n*growth), n >= 0."""

    start: float
    gap: float
    width: float
    growth: float = 0.0

    def __post_init__(self) -> None:
        if self.gap <= 0 or self.width <= 0:
            raise ValueError("gap and width must be positive")
        if self.growth < 0:
            raise ValueError("growth must be >= 0")
        if self.growth == 0.0 and self.width >= self.gap:
            raise ValueError("width must be < gap for disjointness")

    def interval(self, n: int) -> tuple[float, float]:
        a = self.start + n * self.gap
        return (a, a + self.width + n * self.growth)

    def index_near(self, r: float) -> int:
        if r <= self.start:
            return 0
        return int(math.floor((r - self.start) / self.gap))


@dataclass(frozen=True)
class GeometricAnnuliTail:
    """Intervals (theta**n, theta**n * s), s = 1 + fill*(theta-1), n >= 0."""

    ratio: float
    fill: float

    def __post_init__(self) -> None:
        if self.ratio <= 1:
            raise ValueError("ratio must be > 1")
        if not 0 < self.fill < 1:
            raise ValueError("fill must be in (0, 1)")

    @property
    def s(self) -> float:
        return 1.0 + self.fill * (self.ratio - 1.0)

    def interval(self, n: int) -> tuple[float, float]:
        base = self.ratio**n
        return (base, base * self.s)

    def index_near(self, r: float) -> int:
        if r <= 1.0:
            return 0
        return int(math.floor(math.log(r) / math.log(self.ratio)))


def _shrink_pair(a: float, b: float) -> Optional[tuple[float, float]]:
    d = min(a, b - a)
    h = math.sqrt(4.0 + d) / 2.0
    lo, hi = a + h, b - h
    return (lo, hi) if lo < hi else None


@dataclass(frozen=True)
class ShrunkTail:
    """Tail rule whose n-th interval is the shrunk n-th interval of ``base``.

    ``first`` is the smallest base index whose shrunk interval is nonempty;
    every later one is assumed nonempty too (interval widths of the base
    rules grow faster than the sqrt-sized trim).
    """

    base: "ArithmeticTail | GeometricAnnuliTail"
    first: int

    def interval(self, n: int) -> tuple[float, float]:
        pair = _shrink_pair(*self.base.interval(n + self.first))
        if pair is None:
            raise ValueError("shrunk tail produced an empty interval")
        return pair

    def index_near(self, r: float) -> int:
        return max(0, self.base.index_near(r) - self.first)


@dataclass(frozen=True)
class ThickenedTail:
    """Tail whose n-th interval is the base (n + first)-th widened by R.

    Only valid when the widened intervals are pairwise disjoint from index
    ``first`` on (checked by the constructor caller)."""

    base: "ArithmeticTail | GeometricAnnuliTail | ShrunkTail"
    first: int
    R: float

    def interval(self, n: int) -> tuple[float, float]:
        a, b = self.base.interval(n + self.first)
        return (max(0.0, a - self.R), b + self.R)

    def index_near(self, r: float) -> int:
        return max(0, self.base.index_near(r) - self.first)


Tail = ArithmeticTail | GeometricAnnuliTail | ShrunkTail | ThickenedTail


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


@dataclass(frozen=True)
class IntervalUnion:
    intervals: tuple[tuple[float, float], ...] = ()
    tail: Optional[Tail] = None
    # open right end: a single trailing (a, inf) ray
    ray_start: Optional[float] = None

    def __post_init__(self) -> None:
        prev_end = -math.inf
        for a, b in self.intervals:
            if not (a < b):
                raise ValueError(f"empty or inverted interval ({a}, {b})")
            if a < 0:
                raise ValueError("intervals must live in [0, inf)")
            if a < prev_end:
                raise ValueError("intervals must be disjoint and sorted")
            prev_end = b
        if self.tail is not None and self.ray_start is not None:
            raise ValueError("tail rule and infinite ray are mutually exclusive")

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_list(pairs) -> "IntervalUnion":
        return IntervalUnion(intervals=tuple(_merge([(float(a), float(b)) for a, b in pairs])))

    @property
    def bounded(self) -> bool:
        return self.tail is None and self.ray_start is None

    def sup(self) -> float:
        if not self.bounded:
            return math.inf
        return self.intervals[-1][1] if self.intervals else 0.0

    def _tail_between(self, lo: float, hi: float) -> list[tuple[float, float]]:
        """Tail intervals intersecting [lo, hi], by index enumeration."""
        t = self.tail
        if t is None or hi <= 0:
            return []
        n = max(0, t.index_near(lo) - 2)
        out = []
        while True:
            a, b = t.interval(n)
            if a >= hi:
                break
            if b > lo:
                out.append((a, b))
            n += 1
            if len(out) > 2_000_000:
                raise RuntimeError("tail enumeration too long")
        return out

    # -- materialization ------------------------------------------------------

    def materialize(self, r_max: float) -> list[tuple[float, float]]:
        """Explicit disjoint intervals clipped to [0, r_max]."""
        out = [(a, min(b, r_max)) for a, b in self.intervals if a < r_max]
        out += [(a, min(b, r_max)) for a, b in self._tail_between(0.0, r_max)]
        if self.ray_start is not None and self.ray_start < r_max:
            out.append((self.ray_start, r_max))
        return _merge(out)

    # -- measures -------------------------------------------------------------

    def overlap(self, lo: float, hi: float) -> float:
        """Exact measure of the union intersected with [lo, hi]."""
        if hi <= lo:
            return 0.0
        total = 0.0
        for a, b in self.intervals:
            total += max(0.0, min(b, hi) - max(a, lo))
        if self.ray_start is not None:
            total += max(0.0, hi - max(self.ray_start, lo))
        t = self.tail
        if isinstance(t, ArithmeticTail) and t.growth == 0.0:
            total += _arithmetic_overlap(t, max(lo, t.start), hi)
        elif t is not None:
            for a, b in self._tail_between(lo, hi):
                total += max(0.0, min(b, hi) - max(a, lo))
        return total

    def measure(self, r_max: float) -> float:
        return self.overlap(0.0, r_max)

    def edges(self, r_max: float) -> "np.ndarray":
        """Flattened endpoints of the materialized intervals, for vectorized
        membership via searchsorted."""
        import numpy as np

        return np.asarray(self.materialize(r_max), dtype=float).reshape(-1)

    def contains_many(self, r) -> "np.ndarray":
        import numpy as np

        rv = np.asarray(r, dtype=float)
        hi = float(rv.max(initial=0.0)) + 1.0
        cache = getattr(self, "_edge_cache", None)
        if cache is None or cache[0] < hi:
            hi_pad = 2.0 * hi
            cache = (hi_pad, self.edges(hi_pad))
            object.__setattr__(self, "_edge_cache", cache)
        idx = np.searchsorted(cache[1], rv)
        inside = (idx % 2) == 1
        # searchsorted counts boundary hits as inside-or-outside by side;
        # open intervals exclude exact endpoints
        if cache[1].size:
            on_edge = np.isin(rv, cache[1])
            inside &= ~on_edge
        return inside

    def contains(self, r: float) -> bool:
        for a, b in self.intervals:
            if a < r < b:
                return True
        if self.ray_start is not None and r > self.ray_start:
            return True
        t = self.tail
        if t is not None:
            n = t.index_near(r)
            for k in range(max(0, n - 2), n + 3):
                a, b = t.interval(k)
                if a < r < b:
                    return True
        return False

    # -- geometry -------------------------------------------------------------

    def thicken(self, R: float) -> "IntervalUnion":
        """Replace every interval (a, b) by (a - R, b + R), clipped and re-merged.

        Tail rules are widened in place when the widened intervals stay
        disjoint; otherwise the widened tail merges into an infinite ray.
        """
        if R <= 0:
            raise ValueError("R must be positive")
        pairs = [(max(0.0, a - R), b + R) for a, b in self.intervals]
        tail: Optional[Tail] = self.tail
        ray = self.ray_start
        if isinstance(tail, ArithmeticTail) and tail.growth == 0.0:
            if tail.width + 2 * R < tail.gap:
                tail = ArithmeticTail(tail.start - R, tail.gap, tail.width + 2 * R, 0.0)
            else:
                ray = max(0.0, tail.start - R)
                tail = None
        elif tail is not None:
            # gap between consecutive tail intervals either grows without
            # bound (geometric-type) or shrinks to a merge (arithmetic with
            # growing widths); probe a window of gaps to tell the two apart
            horizon = 4000
            gaps = []
            for n in range(horizon):
                gaps.append(tail.interval(n + 1)[0] - tail.interval(n)[1])
            if gaps[-1] > 2 * R and gaps[-1] >= gaps[horizon // 2]:
                # eventually disjoint: widen lazily past the last collision
                last_merge = -1
                for n, g in enumerate(gaps):
                    if g <= 2 * R:
                        last_merge = n
                for k in range(last_merge + 1):
                    a, b = tail.interval(k)
                    pairs.append((max(0.0, a - R), b + R))
                tail = ThickenedTail(tail, last_merge + 1, R)
            else:
                # gaps close up: the widened tail merges into a ray
                merged_at = next(n for n, g in enumerate(gaps) if g <= 2 * R)
                for k in range(merged_at + 1):
                    a, b = tail.interval(k)
                    pairs.append((max(0.0, a - R), b + R))
                ray = max(0.0, tail.interval(merged_at)[0] - R)
                tail = None
        elif ray is not None:
            ray = max(0.0, ray - R)
        merged = _merge(pairs)
        if ray is not None:
            keep = [(a, b) for a, b in merged if a < ray]
            if keep and keep[-1][1] >= ray:
                ray = keep[-1][0]
                keep = keep[:-1]
            merged = keep
        return IntervalUnion(intervals=tuple(merged), tail=tail, ray_start=ray)

    def distance(self, r: float) -> float:
        """Distance from the point r >= 0 to the union."""
        if self.contains(r):
            return 0.0
        best = math.inf
        cands = list(self.intervals)
        if self.ray_start is not None:
            cands.append((self.ray_start, math.inf))
        t = self.tail
        if t is not None:
            n = t.index_near(r)
            for k in range(max(0, n - 2), n + 3):
                cands.append(t.interval(k))
        for a, b in cands:
            if r <= a:
                best = min(best, a - r)
            elif r >= b:
                best = min(best, r - b)
            else:
                return 0.0
        return best


def _arithmetic_overlap(t: ArithmeticTail, lo: float, hi: float) -> float:
    """Exact |tail ∩ [lo, hi]| for a periodic tail (growth = 0), O(1)."""
    if hi <= lo:
        return 0.0

    def cum(x: float) -> float:
        # measure of the tail inside [start, x]
        if x <= t.start:
            return 0.0
        n = math.floor((x - t.start) / t.gap)
        frac = (x - t.start) - n * t.gap
        return n * t.width + min(frac, t.width)

    return cum(hi) - cum(lo)


# -- kappa_star ----------------------------------------------------------------


def g_of_kappa(I: IntervalUnion, kappa: float, r_max: float, grid: int = 256) -> float:
    """Window-density proxy: min over the last decade of a log r-grid of
    (1/r) |I ∩ [kappa*r, r]|."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must be in [0, 1]")
    r_lo = r_max / 10.0
    vals = []
    for k in range(grid):
        r = r_lo * (r_max / r_lo) ** (k / (grid - 1))
        vals.append(I.overlap(kappa * r, r) / r)
    return min(vals)


def kappa_star(
    I: IntervalUnion,
    r_max: float = 1e6,
    grid: int = 256,
    threshold: float = 1e-3,
    kappa_grid: int = 64,
) -> float:
    """Estimate of the least kappa whose windows [kappa*r, r] eventually miss I.

    g is non-increasing and 1-Lipschitz in kappa, so the threshold crossing is
    located by a coarse scan plus bisection.  Returns a value in [0, 1].
    """
    if I.bounded:
        return 0.0
    if g_of_kappa(I, 0.0, r_max, grid) <= threshold:
        return 0.0
    if g_of_kappa(I, 1.0, r_max, grid) > threshold:
        warnings.warn("g(1) above threshold: estimator saturated at 1", stacklevel=2)
        return 1.0
    lo, hi = 0.0, 1.0
    prev = 0.0
    for j in range(1, kappa_grid + 1):
        k = j / kappa_grid
        if g_of_kappa(I, k, r_max, grid) <= threshold:
            lo, hi = prev, k
            break
        prev = k
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if g_of_kappa(I, mid, r_max, grid) <= threshold:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-6:
            break
    return hi


# -- shrunk sets ----------------------------------------------------------------


def shrink_set(I: IntervalUnion) -> IntervalUnion:
    """Trim every interval (a, b) to (a + h, b - h) with h = sqrt(4 + d)/2,
    d = min(a, b - a).  Narrow intervals vanish; an infinite ray passes
    through unchanged; tail rules are shrunk lazily so the result keeps its
    behaviour at infinity."""
    if I.ray_start is not None:
        return I
    pairs = [s for a, b in I.intervals if (s := _shrink_pair(a, b)) is not None]
    tail: Optional[Tail] = None
    if I.tail is not None:
        if isinstance(I.tail, ShrunkTail):
            raise ValueError("iterated shrinking is not supported")
        first = None
        for n in range(100_000):
            if _shrink_pair(*I.tail.interval(n)) is not None:
                first = n
                break
        if first is not None:
            # widths must outgrow the trim for the lazy rule to stay valid
            widths_grow = isinstance(I.tail, GeometricAnnuliTail) or I.tail.growth > 0
            if widths_grow:
                tail = ShrunkTail(I.tail, first)
            else:
                warnings.warn(
                    "shrinking a fixed-width tail: result truncated to the explicit list",
                    stacklevel=2,
                )
    return IntervalUnion(intervals=tuple(_merge(pairs)), tail=tail)
