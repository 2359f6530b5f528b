"""Arithmetic of 2D harmonic oscillators.

Closed forms for the aspect-ratio function Lambda(mu) and its phase-resolved
version, critical and avoiding trajectories, the two-cone horizon T0,
continued-fraction convergents, T-star bracketing, and the spherical-set
observability classification kappa_star vs Lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .flow import PhasePoint
from .intervals import IntervalUnion, kappa_star
from .potentials import Harmonic, PotentialSpec

RATIONALITY_TOL = 1e-12
MAX_DENOMINATOR = 10**6


class IsotropyError(ValueError):
    pass


class BracketingError(RuntimeError):
    pass


# -- spec --------------------------------------------------------------------------


@dataclass(frozen=True)
class OscillatorSpec:
    """Frequencies (nu1, ..., nu_d) sorted ascending, with the rationality of
    nu2/nu1 detected once and stored exactly."""

    freqs: tuple
    rational: Optional[tuple] = None  # (p, q) coprime with nu2/nu1 = p/q, or None

    def __post_init__(self):
        fr = tuple(sorted(float(v) for v in self.freqs))
        if any(v <= 0 for v in fr):
            raise ValueError("frequencies must be positive")
        object.__setattr__(self, "freqs", fr)
        if self.rational is None and len(fr) >= 2:
            object.__setattr__(self, "rational", _detect_rational(fr[1] / fr[0]))
        if self.rational is not None:
            p, q = self.rational
            if math.gcd(p, q) != 1 or p <= 0 or q <= 0:
                raise ValueError("p, q must be coprime positive integers")
            if len(fr) >= 2 and abs(fr[1] / fr[0] - p / q) > 1e-10:
                raise ValueError("declared ratio does not match the frequencies")

    @property
    def mu(self) -> float:
        return self.freqs[1] / self.freqs[0]

    @property
    def is_rational(self) -> bool:
        return self.rational is not None

    @property
    def is_isotropic(self) -> bool:
        return self.rational == (1, 1)

    @property
    def period(self) -> float:
        """Common period 2*pi*q/nu1 = 2*pi*p/nu2 (rational case)."""
        if self.rational is None:
            raise ValueError("irrational oscillator has no common period")
        return 2.0 * math.pi * self.rational[1] / self.freqs[0]

    def to_potential(self) -> Harmonic:
        return Harmonic(tuple(
            tuple(v * v if i == j else 0.0 for j, v in enumerate(self.freqs))
            for i in range(len(self.freqs))
        ))


def _detect_rational(mu: float) -> Optional[tuple]:
    """Rational detection with a q-scaled tolerance: without the 1/q factor
    every badly-approximable irrational would be captured by some large
    convergent (the golden ratio matches a Fibonacci ratio within 1e-12)."""
    frac = Fraction(mu).limit_denominator(MAX_DENOMINATOR)
    if abs(mu - frac.numerator / frac.denominator) <= RATIONALITY_TOL / frac.denominator:
        return (frac.numerator, frac.denominator)
    return None


# -- Lambda ------------------------------------------------------------------------


def lambda_of_mu(rational: Optional[tuple]) -> float:
    """Lambda(mu): tan(pi/(2(p+q))) for p - q even, sin(pi/(2(p+q))) for
    p - q odd, 0 for irrational mu."""
    if rational is None:
        return 0.0
    p, q = rational
    if math.gcd(p, q) != 1:
        raise ValueError("p, q must be coprime")
    c = math.pi / (2.0 * (p + q))
    return math.tan(c) if (p - q) % 2 == 0 else math.sin(c)


def d0(theta1: float, theta2: float, p: int, q: int) -> float:
    """Doubled distance of p*theta1/pi - q*theta2/pi to the integers."""
    u = p * theta1 / math.pi - q * theta2 / math.pi
    return 2.0 * abs(u - round(u))


def lambda_theta(theta1: float, theta2: float, p: int, q: int) -> float:
    """Phase-resolved aspect ratio; its maximum over phases is lambda_of_mu."""
    c = math.pi / (2.0 * (p + q))
    d = d0(theta1, theta2, p, q)
    if (p - q) % 2 == 0:
        return math.tan(c * d)
    return math.sin(c) - math.cos(c) * math.tan(c * (1.0 - d))


def aspect_ratio_bruteforce(
    p: int,
    q: int,
    grid: int = 64,
    t_samples: int = 4096,
    polish: bool = True,
) -> float:
    """Independent numerical oracle for Lambda(p/q): maximize over sampled
    trajectories the ratio min_t |x(t)| / max_t |x(t)| over one period.

    Trajectories x_j = A_j sin(nu_j t + theta_j) with nu = (q, p) (so
    nu2/nu1 = p/q) and (A1, A2) = (sqrt(1-lam), sqrt(lam)).  Phases are
    gridded over one period pi/p x pi/q of the ratio, lam over (0, 1)."""
    if math.gcd(p, q) != 1:
        raise ValueError("p, q must be coprime")
    nu1, nu2 = float(q), float(p)
    period = 2.0 * math.pi  # = 2*pi*q/nu1
    ts = np.linspace(0.0, period, t_samples, endpoint=False)
    lam = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    th1s = np.arange(grid) * (math.pi / p) / grid
    th2s = np.arange(grid) * (math.pi / q) / grid
    s1sq = np.sin(nu1 * ts[None, :] + th1s[:, None]) ** 2  # (grid, t)
    s2sq = np.sin(nu2 * ts[None, :] + th2s[:, None]) ** 2

    def ratio(lmb: float, th1: float, th2: float) -> float:
        r2 = (1.0 - lmb) * np.sin(nu1 * ts + th1) ** 2 + lmb * np.sin(nu2 * ts + th2) ** 2
        return math.sqrt(r2.min() / r2.max())

    best, best_arg = 0.0, (0.5, 0.0, 0.0)
    a1 = (1.0 - lam)[:, None, None]
    a2 = lam[:, None, None]
    for i, th1 in enumerate(th1s):
        # (lam, theta2, t) block for this theta1
        r2 = a1 * s1sq[i][None, None, :] + a2 * s2sq[None, :, :]
        val2 = r2.min(axis=2) / r2.max(axis=2)
        k = int(np.argmax(val2))
        il, j = divmod(k, grid)
        v = math.sqrt(val2[il, j])
        if v > best:
            best, best_arg = v, (float(lam[il]), float(th1), float(th2s[j]))
    if polish:
        res = optimize.minimize(
            lambda z: -ratio(min(max(z[0], 1e-9), 1 - 1e-9), z[1], z[2]),
            np.asarray(best_arg),
            method="Nelder-Mead",
            options={"maxiter": 400, "xatol": 1e-8, "fatol": 1e-12},
        )
        best = max(best, -res.fun)
    return best


# -- critical and avoiding trajectories ----------------------------------------------


def critical_trajectory(p: int, q: int, nu1: float = 1.0) -> tuple[tuple, tuple]:
    """Actions and angles of the trajectory realizing Lambda(p/q):
    (A1, A2) = (sqrt(p/(p+q)), sqrt(q/(p+q))), (theta1, theta2) = (pi/2p, 0)."""
    if math.gcd(p, q) != 1:
        raise ValueError("p, q must be coprime")
    if p == q:
        raise IsotropyError("critical trajectory is defined for p != q")
    actions = (math.sqrt(p / (p + q)), math.sqrt(q / (p + q)))
    angles = (math.pi / (2.0 * p), 0.0)
    return actions, angles


def trajectory_radius_ratio(
    p: int, q: int, actions, angles, nu1: float = 1.0, t_samples: int = 200_000
) -> float:
    """min_t |x| / max_t |x| over one period, by dense sampling plus a local
    polish of both extrema."""
    nu = np.array([nu1, nu1 * p / q])
    period = 2.0 * math.pi * q / nu1
    ts = np.linspace(0.0, period, t_samples, endpoint=False)
    A = np.asarray(actions, dtype=float)
    th = np.asarray(angles, dtype=float)
    r2 = (A[0] * np.sin(nu[0] * ts + th[0])) ** 2 + (A[1] * np.sin(nu[1] * ts + th[1])) ** 2

    def f(t: float) -> float:
        return (A[0] * math.sin(nu[0] * t + th[0])) ** 2 + (
            A[1] * math.sin(nu[1] * t + th[1])
        ) ** 2

    dt = period / t_samples
    t_min = float(ts[np.argmin(r2)])
    t_max = float(ts[np.argmax(r2)])
    lo = optimize.minimize_scalar(f, bracket=None, bounds=(t_min - dt, t_min + dt), method="bounded",
                                  options={"xatol": 1e-14})
    hi = optimize.minimize_scalar(lambda t: -f(t), bounds=(t_max - dt, t_max + dt), method="bounded",
                                  options={"xatol": 1e-14})
    return math.sqrt(lo.fun / -hi.fun)


def two_cones_T0(nu_plus: float, nu_minus: float) -> float:
    """T0 = (pi/nu_plus) (2 + floor(nu_plus/nu_minus)); arguments swapped if
    given in the wrong order."""
    if nu_plus < nu_minus:
        nu_plus, nu_minus = nu_minus, nu_plus
    if nu_minus <= 0:
        raise ValueError("frequencies must be positive")
    return (math.pi / nu_plus) * (2 + math.floor(nu_plus / nu_minus))


@dataclass(frozen=True)
class AvoidingTrajectory:
    nu1: float
    nu2: float
    epsilon: float
    actions: tuple  # (A1, A2)
    phases: tuple   # arguments of the two sine factors at t = 0
    sign: float
    T_avoid: float
    delta: float

    def positions(self, ts: np.ndarray) -> np.ndarray:
        # both components vanish simultaneously at t0 = (pi/nu2)(1 - delta);
        # evaluating the sines in t - t0 keeps that origin crossing exact in
        # floating point (sin(ph1 - nu1 t) = sin(nu1 (t0 - t)) identically)
        A1, A2 = self.actions
        t0 = (math.pi / self.nu2) * (1.0 - self.delta)
        u = np.asarray(ts) - t0
        x1 = -A1 * np.sin(self.nu1 * u)
        x2 = -A2 * self.sign * np.sin(self.nu2 * u)
        return np.stack([x1, x2], axis=1)


def avoiding_trajectory_two_cones(
    nu1: float, nu2: float, epsilon: float
) -> AvoidingTrajectory:
    """A trajectory staying outside the doubled two-cone set omega(2 eps) for
    a time T0 - C eps^2, C = 8 pi / (nu2 min(1, nu2/nu1 - 1))."""
    if not 0 < epsilon < math.pi / 4:
        raise ValueError("epsilon must be in (0, pi/4)")
    if not nu2 > nu1 > 0:
        raise ValueError("need nu2 > nu1 > 0")
    gap = min(1.0, nu2 / nu1 - 1.0)
    delta = 4.0 * epsilon**2 / gap
    ratio = 2.0 * epsilon * (nu2 / nu1) / gap
    A2 = 1.0
    A1 = ratio * A2
    T0 = two_cones_T0(nu2, nu1)
    T_avoid = T0 - 2.0 * (math.pi / nu2) * delta
    ph1 = math.pi * (nu1 / nu2) * (1.0 - delta)
    ph2 = math.pi * delta
    # the sign of the fast component is fixed by requiring x2 <= 0 on the
    # middle leg [t1, t2]
    t0 = (math.pi / nu2) * (1.0 - delta)
    t1 = t0 + math.pi / nu1
    t2 = T0 - (math.pi / nu2) * delta
    ts_mid = np.linspace(t1, min(t2, T_avoid), 64)
    sign = 1.0
    probe = AvoidingTrajectory(nu1, nu2, epsilon, (A1, A2), (ph1, ph2), sign, T_avoid, delta)
    if np.max(probe.positions(ts_mid)[:, 1]) > 0:
        sign = -1.0
    return AvoidingTrajectory(nu1, nu2, epsilon, (A1, A2), (ph1, ph2), sign, T_avoid, delta)


# -- convergents and T-star ----------------------------------------------------------


@dataclass(frozen=True)
class ConvergentList:
    entries: tuple  # ((p_j, q_j), ...)
    mu: float
    terminated_rational: bool

    def __post_init__(self):
        qs = [q for _, q in self.entries]
        if any(b < a for a, b in zip(qs, qs[1:])):
            raise ValueError("denominators must be nondecreasing")


def convergents(mu: float, count: int = 32) -> ConvergentList:
    """Continued-fraction convergents of mu in exact integer arithmetic.

    The float is expanded exactly (every float is rational); the expansion is
    cut off once q_j^2 exceeds the input precision, since further convergents
    would reflect the binary representation rather than the intended number.
    Inputs recognized as rational (denominator <= 10^6 within 1e-12)
    terminate exactly and are flagged."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    detected = _detect_rational(mu)
    target = Fraction(detected[0], detected[1]) if detected else Fraction(mu)
    q_limit = math.sqrt(1.0 / max(abs(mu) * 2.0**-52, 1e-300))
    entries: list[tuple[int, int]] = []
    a, b = target.numerator, target.denominator
    h0, h1 = 0, 1  # numerators
    k0, k1 = 1, 0  # denominators
    terminated = False
    while len(entries) < count:
        coef, rem = divmod(a, b)
        h0, h1 = h1, coef * h1 + h0
        k0, k1 = k1, coef * k1 + k0
        entries.append((h1, k1))
        if rem == 0:
            terminated = True
            break
        if detected is None and k1 > q_limit:
            break
        a, b = b, rem
    return ConvergentList(tuple(entries), float(mu), terminated and detected is not None)


def t_star_bounds(
    mu: float,
    kappa_star_value: float,
    nu1: float = 1.0,
    delta1: float = 1.0,
    delta2: float = 6.0 * math.pi,
    count: int = 64,
) -> dict:
    """Bracket the critical observation time by convergent denominators:
    lower = 2 pi q_{j1} / nu1 with j1 the largest index with q_j <= delta1 /
    kappa_star, upper = 2 pi q_{j2} / nu1 with j2 the smallest index with
    q_j >= delta2 / kappa_star.  Rational mu short-circuits to the exact
    one-period bound."""
    if not 0 < kappa_star_value <= 1:
        raise ValueError("kappa_star must be in (0, 1]")
    detected = _detect_rational(mu)
    if detected is not None:
        p, q = detected
        nu2 = mu * nu1
        return {
            "mu": mu,
            "rational": [p, q],
            "lower": 0.0,
            "upper": math.pi * p / nu2,
            "j1": None,
            "j2": None,
            "delta1": delta1,
            "delta2": delta2,
        }
    conv = convergents(mu, count)
    qs = [q for _, q in conv.entries]
    thr_lo = delta1 / kappa_star_value
    thr_hi = delta2 / kappa_star_value
    j1 = max((j for j, q in enumerate(qs) if q <= thr_lo), default=None)
    j2 = next((j for j, q in enumerate(qs) if q >= thr_hi), None)
    if j1 is None or j2 is None:
        raise BracketingError(
            "convergent list does not bracket the thresholds; increase count "
            "or the precision of mu"
        )
    return {
        "mu": mu,
        "rational": None,
        "lower": 2.0 * math.pi * qs[j1] / nu1,
        "upper": 2.0 * math.pi * qs[j2] / nu1,
        "j1": j1,
        "j2": j2,
        "q_j1": qs[j1],
        "q_j2": qs[j2],
        "delta1": delta1,
        "delta2": delta2,
    }


# -- classification ------------------------------------------------------------------


def classify_spherical(spec: OscillatorSpec, I: IntervalUnion, **kappa_kwargs) -> dict:
    """Observability of the 2D anisotropic oscillator from omega(I):
    observable iff kappa_star(I) > Lambda(nu2/nu1)."""
    if len(spec.freqs) != 2:
        raise ValueError("classification is two-dimensional")
    if spec.is_isotropic:
        raise IsotropyError("isotropic oscillators follow the conical criterion instead")
    lam = lambda_of_mu(spec.rational)
    ks = kappa_star(I, **kappa_kwargs)
    return {
        "mu": spec.mu,
        "rational": list(spec.rational) if spec.rational else None,
        "lambda": lam,
        "kappa_star": ks,
        "observable": bool(ks > lam),
        "margin": ks - lam,
    }


# -- circular orbits and axis escape --------------------------------------------------


def circular_orbit(spec: PotentialSpec, x0, tol: float = 1e-10) -> dict:
    """Circular orbit through x0: requires grad V(x0) = c x0 with c > 0; the
    orbit then rotates in the plane of x0 and its velocity with angular
    frequency sqrt(c)."""
    x0 = np.asarray(x0, dtype=float)
    if np.linalg.norm(x0) == 0:
        raise ValueError("x0 must be nonzero")
    _, g, _ = spec.eval(x0)
    c = float(g @ x0) / float(x0 @ x0)
    resid = np.linalg.norm(g - c * x0)
    if c <= 0 or resid > tol * max(np.linalg.norm(g), 1.0):
        raise ValueError(
            f"gradient is not radial at x0 (residual {resid:.3e}); no circular orbit"
        )
    omega = math.sqrt(c)
    # velocity: any unit vector orthogonal to x0 in an invariant plane
    d = len(x0)
    e = np.zeros(d)
    e[int(np.argmin(np.abs(x0)))] = 1.0
    v = e - (e @ x0) / (x0 @ x0) * x0
    v /= np.linalg.norm(v)
    # the gradient must stay radial with the same c along the whole circle,
    # not just at x0; checking the quarter-turn point catches anisotropy
    y = np.linalg.norm(x0) * v
    _, gy, _ = spec.eval(y)
    resid_y = np.linalg.norm(gy - c * y)
    if resid_y > tol * max(np.linalg.norm(gy), 1.0):
        raise ValueError(
            f"gradient is not radial along the orbit (residual {resid_y:.3e}); "
            "no circular orbit"
        )
    xi0 = omega * np.linalg.norm(x0) * v
    return {
        "c": c,
        "omega": omega,
        "period": 2.0 * math.pi / omega,
        "rho0": PhasePoint(tuple(x0.tolist()), tuple(xi0.tolist())),
    }


def conical_axis_escape(
    spec: Harmonic,
    s,
    R: float,
    etas: Sequence[float] = tuple(np.geomspace(1e2, 1e5, 7)),
    n_samples: int = 200_000,
) -> Optional[dict]:
    """Escape certificate along an eigen-axis missing the cone: the family
    rho_eta = (0, eta e) spends O(R/eta) time in the R-thickening of the set.

    Returns None when every eigen-axis meets the closure of the set."""
    from .classical import _measure_from_samples
    from .sets import thicken

    evals, Q = np.linalg.eigh(spec.A)
    nus = np.sqrt(evals)
    axis = None
    thick = thicken(s, R)
    for j in range(len(nus)):
        e = Q[:, j]
        d_plus = float(s.signed_distance(e[None, :] * 1.0)[0])
        d_minus = float(s.signed_distance(-e[None, :] * 1.0)[0])
        if d_plus > 1e-9 and d_minus > 1e-9:
            axis = j
            break
    if axis is None:
        return None
    e = Q[:, axis]
    nu_ax = nus[axis]
    T = 2.0 * math.pi / nu_ax
    times = []
    for eta in etas:
        # the eigenline is invariant: x(t) = sin(nu t) (eta/nu) e
        amp = eta / nu_ax

        def pos(t: float) -> np.ndarray:
            return math.sin(nu_ax * t) * amp * e

        ts = np.linspace(0.0, T, 8193)
        xs = np.sin(nu_ax * ts)[:, None] * (amp * e)[None, :]
        member = thick.contains_many(xs)

        def inside(x: np.ndarray) -> bool:
            return bool(thick.contains_many(x[None, :])[0])

        times.append(_measure_from_samples(ts, member, pos, inside, 1e-9 * T))
    logs_eta = np.log(np.asarray(etas))
    logs_t = np.log(np.maximum(np.asarray(times), 1e-300))
    slope = float(np.polyfit(logs_eta, logs_t, 1)[0])
    return {
        "axis": e.tolist(),
        "frequency": float(nu_ax),
        "etas": list(map(float, etas)),
        "times": list(map(float, times)),
        "exponent": slope,
    }
