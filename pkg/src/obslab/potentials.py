"""Confining potential families with closed-form derivatives.

Four kinds are supported:

* ``Harmonic`` — V(x) = x·Ax/2 for a symmetric positive-definite matrix A;
* ``PowerConfining`` — V(x) = c <x>^(2m), <x> = sqrt(1 + |x|^2);
* ``CriticalPoints`` — V(x) = (2 + sin(a log<x>)) |x|^2, which develops
  critical points away from the origin once a > 2*sqrt(3);
* ``Perturbed`` — a base potential plus a Gaussian bump, a bounded
  perturbation that leaves the principal growth untouched.

Gradients and Hessians are analytic; nothing here differentiates numerically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

SUBQUADRATIC_LIMIT = 1.0


def _as_vec(x, d: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.shape != (d,):
        raise ValueError(f"expected a length-{d} vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("position must be finite")
    return v


@dataclass(frozen=True)
class Harmonic:
    matrix: tuple  # d x d nested tuples, symmetric positive definite

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("matrix must be symmetric")
        if np.linalg.eigvalsh(A).min() <= 0:
            raise ValueError("matrix must be positive definite")
        object.__setattr__(self, "matrix", tuple(map(tuple, A.tolist())))

    @property
    def A(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    @property
    def growth_exponent(self) -> float:
        return 1.0

    def frequencies(self) -> np.ndarray:
        return np.sqrt(np.linalg.eigvalsh(self.A))

    def eval(self, x: np.ndarray):
        A = self.A
        Ax = A @ x
        return 0.5 * float(x @ Ax), Ax, A.copy()


@dataclass(frozen=True)
class PowerConfining:
    m: float
    c: float
    dimension: int

    def __post_init__(self):
        if self.m <= 0 or self.c <= 0 or self.dimension < 1:
            raise ValueError("need m > 0, c > 0, d >= 1")

    @property
    def growth_exponent(self) -> float:
        return self.m

    def eval(self, x: np.ndarray):
        m, c = self.m, self.c
        w = 1.0 + float(x @ x)
        value = c * w**m
        # d/dx c w^m = 2 m c w^(m-1) x
        grad = 2 * m * c * w ** (m - 1) * x
        hess = 2 * m * c * (
            w ** (m - 1) * np.eye(len(x)) + 2 * (m - 1) * w ** (m - 2) * np.outer(x, x)
        )
        return value, grad, hess


@dataclass(frozen=True)
class CriticalPoints:
    a: float
    dimension: int = 1

    def __post_init__(self):
        if self.a <= 0 or self.dimension < 1:
            raise ValueError("need a > 0, d >= 1")

    @property
    def growth_exponent(self) -> float:
        return 1.0

    @property
    def has_critical_points(self) -> bool:
        return self.a > 2 * math.sqrt(3.0)

    def eval(self, x: np.ndarray):
        a = self.a
        w = float(x @ x)
        u = 0.5 * a * math.log1p(w)
        s, co = math.sin(u), math.cos(u)
        value = (2.0 + s) * w
        # V = (2 + sin u(w)) w with u = (a/2) log(1+w), w = |x|^2
        f = 2.0 * (2.0 + s) + a * w * co / (1.0 + w)
        fp = a * (-a * w * s + (2.0 * w + 4.0) * co) / (2.0 * (1.0 + w) ** 2)
        grad = f * x
        hess = f * np.eye(len(x)) + 2.0 * fp * np.outer(x, x)
        return value, grad, hess

    def radial_critical_points(self, n_max: int = 8) -> list[float]:
        """Positive radii r with V'(r) = 0, one pair per log-period window.

        Located by a sign-change scan of the closed-form radial derivative
        followed by bisection.  Empty when a <= 2*sqrt(3)."""
        if not self.has_critical_points:
            return []
        a = self.a

        def fval(r: float) -> float:
            w = r * r
            u = 0.5 * a * math.log1p(w)
            return 2.0 * (2.0 + math.sin(u)) + a * w * math.cos(u) / (1.0 + w)

        roots: list[float] = []
        # scan log-uniformly; each period of u contains the sign pattern
        r = 1.0
        step = math.exp(math.pi / (40.0 * a))
        prev_r, prev_f = r, fval(r)
        while len(roots) < 2 * n_max and r < 1e12:
            r *= step
            f = fval(r)
            if prev_f == 0.0:
                roots.append(prev_r)
            elif prev_f * f < 0.0:
                lo, hi = prev_r, r
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if fval(lo) * fval(mid) <= 0.0:
                        hi = mid
                    else:
                        lo = mid
                roots.append(0.5 * (lo + hi))
            prev_r, prev_f = r, f
        return roots[: 2 * n_max]


@dataclass(frozen=True)
class Perturbed:
    base: "PotentialSpec"
    center: tuple
    amplitude: float
    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.shape != (self.base.dimension,):
            raise ValueError("center dimension mismatch")
        object.__setattr__(self, "center", tuple(c.tolist()))

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def growth_exponent(self) -> float:
        return self.base.growth_exponent

    def eval(self, x: np.ndarray):
        v, g, h = self.base.eval(x)
        c = np.asarray(self.center, dtype=float)
        dx = x - c
        w2 = self.width**2
        bump = self.amplitude * math.exp(-float(dx @ dx) / (2 * w2))
        v += bump
        g = g + bump * (-dx / w2)
        h = h + bump * (np.outer(dx, dx) / w2**2 - np.eye(len(x)) / w2)
        return v, g, h


PotentialSpec = Union[Harmonic, PowerConfining, CriticalPoints, Perturbed]


def eval_potential(spec: PotentialSpec, x) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of the potential at x (all closed-form)."""
    xv = _as_vec(x, spec.dimension)
    if spec.growth_exponent > SUBQUADRATIC_LIMIT:
        warnings.warn(
            "superquadratic growth (m > 1): high-energy observability theory "
            "only partially applies",
            stacklevel=2,
        )
    return spec.eval(xv)


def gradient(spec: PotentialSpec, x: np.ndarray) -> np.ndarray:
    """Gradient only, without the superquadratic warning (hot integrator path)."""
    return spec.eval(x)[1]


def growth_sandwich_ok(
    spec: PotentialSpec, r_min: float = 10.0, r_max: float = 1e6, n: int = 80
) -> bool:
    """Numeric check of the growth envelope: V(x)/<x>^(2m) bounded within a
    fixed ratio band on a log-spaced sample of radii."""
    m = spec.growth_exponent
    rng = np.random.default_rng(0)
    ratios = []
    for r in np.geomspace(r_min, r_max, n):
        u = rng.normal(size=spec.dimension)
        u /= np.linalg.norm(u)
        x = r * u
        v = spec.eval(x)[0]
        ratios.append(v / (1.0 + r * r) ** m)
    ratios = np.asarray(ratios)
    return bool(ratios.min() > 0 and ratios.max() / ratios.min() < 1e3)


def same_principal_symbol(
    spec1: PotentialSpec,
    spec2: PotentialSpec,
    r_min: float = 1.0,
    r_max: float = 1e6,
    n: int = 60,
    bound: float = 1e3,
) -> bool:
    """Numeric equivalence test: derivatives of V1 - V2 up to order 2 decay one
    power faster than the common growth, sup over a log-spaced radial grid."""
    if spec1.dimension != spec2.dimension:
        return False
    if spec1.growth_exponent != spec2.growth_exponent:
        return False
    m = spec1.growth_exponent
    rng = np.random.default_rng(1)
    worst = 0.0
    for r in np.geomspace(r_min, r_max, n):
        u = rng.normal(size=spec1.dimension)
        u /= np.linalg.norm(u)
        x = r * u
        v1, g1, h1 = spec1.eval(x)
        v2, g2, h2 = spec2.eval(x)
        jap = math.sqrt(1.0 + r * r)
        worst = max(
            worst,
            abs(v1 - v2) * jap ** (1 - 2 * m),
            float(np.max(np.abs(g1 - g2))) * jap ** (2 - 2 * m),
            float(np.max(np.abs(h1 - h2))) * jap ** (3 - 2 * m),
        )
    return worst < bound


# -- JSON round trip -------------------------------------------------------------


def potential_to_dict(spec: PotentialSpec) -> dict:
    if isinstance(spec, Harmonic):
        return {"kind": "harmonic", "matrix": [list(row) for row in spec.matrix]}
    if isinstance(spec, PowerConfining):
        return {"kind": "power", "m": spec.m, "c": spec.c, "d": spec.dimension}
    if isinstance(spec, CriticalPoints):
        return {"kind": "critical_points", "a": spec.a, "d": spec.dimension}
    if isinstance(spec, Perturbed):
        return {
            "kind": "perturbed",
            "base": potential_to_dict(spec.base),
            "center": list(spec.center),
            "amplitude": spec.amplitude,
            "width": spec.width,
        }
    raise TypeError(f"unknown potential {spec!r}")


def potential_from_dict(data: dict) -> PotentialSpec:
    kind = data.get("kind")
    if kind == "harmonic":
        return Harmonic(tuple(map(tuple, data["matrix"])))
    if kind == "power":
        return PowerConfining(float(data["m"]), float(data["c"]), int(data["d"]))
    if kind == "critical_points":
        return CriticalPoints(float(data["a"]), int(data.get("d", 1)))
    if kind == "perturbed":
        return Perturbed(
            potential_from_dict(data["base"]),
            tuple(data["center"]),
            float(data["amplitude"]),
            float(data["width"]),
        )
    raise ValueError(f"unknown potential kind {kind!r}")
