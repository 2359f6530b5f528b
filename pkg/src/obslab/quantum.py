"""Exact-spectrum quantum layer for harmonic oscillators.

Hermite bases in one and two dimensions, indicator-matrix assembly by panel
quadrature, observability Gramians in closed form, band-restricted smallest
eigenvalues, coherent states and their exact propagation, and Gaussian
phase-space pairing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .flow import PhasePoint, exact_harmonic_flow
from .sets import (
    ConicalArcs,
    FullSpace,
    HalfLineCone,
    ObservationSet,
    Spherical,
    TwoCones,
)

SQRT_PI = math.sqrt(math.pi)


class QuadratureError(RuntimeError):
    """Doubled quadrature nodes moved an indicator-matrix entry too much."""


class TruncationError(RuntimeError):
    pass


# -- basis ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HermiteBasis:
    """Tensor Hermite eigenbasis of (1/2)(-Delta + nu^2 |x|^2), isotropic
    frequency per axis; d in {1, 2}."""

    nu: float
    N: int  # modes per axis
    d: int = 1

    def __post_init__(self):
        if self.nu <= 0 or self.N < 1 or self.d not in (1, 2):
            raise ValueError("need nu > 0, N >= 1, d in {1, 2}")

    @property
    def size(self) -> int:
        return self.N**self.d

    @property
    def indices(self) -> np.ndarray:
        """(size, d) array of per-axis quantum numbers, lexicographic."""
        if self.d == 1:
            return np.arange(self.N)[:, None]
        n1, n2 = np.meshgrid(np.arange(self.N), np.arange(self.N), indexing="ij")
        return np.stack([n1.ravel(), n2.ravel()], axis=1)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.nu * (self.indices.sum(axis=1) + 0.5 * self.d)

    def x_max(self) -> float:
        """Radius beyond which every basis function is negligible."""
        turning = math.sqrt((2 * self.N + 1) / self.nu)
        return 1.35 * turning + 6.0 / math.sqrt(self.nu)


def hermite_all(nu: float, N: int, x: np.ndarray) -> np.ndarray:
    """Values of the first N normalized Hermite functions of frequency nu at
    the points x, shape (N, len(x)); stable normalized recurrence."""
    x = np.asarray(x, dtype=float)
    y = math.sqrt(nu) * x
    out = np.empty((N, len(y)))
    out[0] = (nu / math.pi) ** 0.25 * np.exp(-0.5 * y * y)
    if N > 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for n in range(2, N):
        out[n] = math.sqrt(2.0 / n) * y * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def hermite_eval(nu: float, n: int, x) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > 2000:
        raise ValueError("recurrence validated for n <= 2000")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.max(np.abs(x)) * math.sqrt(nu) > 60.0:
        raise ValueError("argument outside the validated range |x| sqrt(nu) <= 60")
    return hermite_all(nu, n + 1, x)[n]


# -- indicator matrices ----------------------------------------------------------------


def _panel_nodes(a: float, b: float, nu: float, N: int, factor: int = 1) -> tuple:
    n = factor * (int(1.3 * math.sqrt(2 * N + 1) * (b - a) * math.sqrt(nu) / math.pi) + 32)
    z, w = leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * z, half * w


def _intervals_1d(s: ObservationSet, x_max: float) -> list[tuple[float, float]]:
    """The set {x in (-x_max, x_max)} as a list of disjoint intervals."""
    if isinstance(s, FullSpace):
        return [(-x_max, x_max)]
    if isinstance(s, Spherical):
        pos = [(a, min(b, x_max)) for a, b in s.radii.materialize(x_max) if a < x_max]
        return [(-b, -a) for a, b in reversed(pos) if a < b] + [(a, b) for a, b in pos if a < b]
    if isinstance(s, HalfLineCone):
        out = []
        if s.negative is not None and s.negative < x_max:
            out.append((-x_max, -s.negative))
        if s.positive is not None and s.positive < x_max:
            out.append((s.positive, x_max))
        return out
    raise ValueError(f"no 1D interval form for {type(s).__name__}")


def _indicator_1d(basis: HermiteBasis, s: ObservationSet, factor: int) -> np.ndarray:
    M = np.zeros((basis.N, basis.N))
    for a, b in _intervals_1d(s, basis.x_max()):
        xs, ws = _panel_nodes(a, b, basis.nu, basis.N, factor)
        H = hermite_all(basis.nu, basis.N, xs)
        M += (H * ws) @ H.T
    return M


def _as_arcs(s: ObservationSet) -> ConicalArcs:
    if isinstance(s, ConicalArcs):
        return s
    if isinstance(s, TwoCones):
        h = s.epsilon / 2.0
        b = s.basis_angle
        return ConicalArcs(((b - h, b + h), (b + math.pi / 2 - h, b + math.pi / 2 + h)))
    raise ValueError(f"no arc form for {type(s).__name__}")


def _polar_grid(
    basis: HermiteBasis, arcs: ConicalArcs, factor: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Polar product quadrature over the cone over the arcs: radial Gauss on
    (0, x_max), per-arc angular Gauss."""
    r_max = basis.x_max()
    zr, wr = leggauss(factor * (2 * basis.N + 48))
    r = 0.5 * r_max * (zr + 1.0)
    wr = 0.5 * r_max * wr * r  # polar Jacobian
    thetas, wths = [], []
    for a, b in arcs.arcs:
        length = (b - a) % (2 * math.pi)
        if length == 0:
            length = 2 * math.pi
        n = factor * (2 * basis.N + int(8 * length) + 16)
        zt, wt = leggauss(n)
        thetas.append(a + 0.5 * length * (zt + 1.0))
        wths.append(0.5 * length * wt)
    th = np.concatenate(thetas)
    wth = np.concatenate(wths)
    return r, wr, (th, wth)


def _indicator_2d(basis: HermiteBasis, s: ObservationSet, factor: int) -> np.ndarray:
    if isinstance(s, (ConicalArcs, TwoCones)):
        arcs = _as_arcs(s)
        r, wr, (th, wth) = _polar_grid(basis, arcs, factor)
        X = r[:, None] * np.cos(th)[None, :]
        Y = r[:, None] * np.sin(th)[None, :]
        W = wr[:, None] * wth[None, :]
    elif isinstance(s, Spherical):
        rs, wrs = [], []
        r_max = basis.x_max()
        for a, b in s.radii.materialize(r_max):
            b = min(b, r_max)
            if b <= a:
                continue
            zr, wr_p = leggauss(factor * (basis.N + int(4 * (b - a) * math.sqrt(basis.nu)) + 24))
            rr = 0.5 * (a + b) + 0.5 * (b - a) * zr
            rs.append(rr)
            wrs.append(0.5 * (b - a) * wr_p * rr)
        if not rs:
            return np.zeros((basis.size, basis.size))
        r = np.concatenate(rs)
        wr = np.concatenate(wrs)
        n_th = factor * (2 * basis.N + 16)
        th = 2 * math.pi * (np.arange(n_th) + 0.5) / n_th
        wth = np.full(n_th, 2 * math.pi / n_th)
        X = r[:, None] * np.cos(th)[None, :]
        Y = r[:, None] * np.sin(th)[None, :]
        W = wr[:, None] * wth[None, :]
    else:
        raise ValueError(f"no 2D quadrature for {type(s).__name__}")
    H1 = hermite_all(basis.nu, basis.N, X.ravel())
    H2 = hermite_all(basis.nu, basis.N, Y.ravel())
    V = (H1[:, None, :] * H2[None, :, :]).reshape(basis.size, -1)
    return (V * W.ravel()) @ V.T


def indicator_matrix(
    basis: HermiteBasis, s: ObservationSet, check: bool = True, tol: float = 1e-7
) -> np.ndarray:
    """M_{mn} = <phi_m, 1_omega phi_n>, assembled by panel quadrature; a
    node-doubling pass guards the resolution."""
    if isinstance(s, FullSpace):
        return np.eye(basis.size)
    build = _indicator_1d if basis.d == 1 else _indicator_2d
    M = build(basis, s, 1)
    if check:
        M2 = build(basis, s, 2)
        err = float(np.max(np.abs(M - M2)))
        if err > tol:
            raise QuadratureError(
                f"node doubling moved entries by {err:.2e} > {tol:.0e}"
            )
        M = M2
    return 0.5 * (M + M.T)


# -- Gramian ---------------------------------------------------------------------------


def gramian(basis: HermiteBasis, M: np.ndarray, T: float) -> np.ndarray:
    """G_{mn} = M_{mn} gamma_{mn}(T), gamma = T on resonant pairs and
    (e^{i(lm-ln)T}-1)/(i(lm-ln)) otherwise."""
    lam = basis.eigenvalues
    diff = lam[:, None] - lam[None, :]
    gamma = np.empty(diff.shape, dtype=complex)
    res = np.abs(diff) < 1e-12
    gamma[res] = T
    d = diff[~res]
    gamma[~res] = (np.exp(1j * d * T) - 1.0) / (1j * d)
    G = M * gamma
    return 0.5 * (G + G.conj().T)


def band_indices(basis: HermiteBasis, band: tuple[float, float]) -> np.ndarray:
    lam = basis.eigenvalues
    lo, hi = band
    idx = np.nonzero((lam >= lo) & (lam <= hi))[0]
    return idx


def band_obs_cost(
    G: np.ndarray, basis: HermiteBasis, band: tuple[float, float]
) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue (and eigenvector) of the compression of G to the
    spectral band; 1/min_eig is the observability-cost proxy on the band."""
    lam = basis.eigenvalues
    if band[1] > 0.8 * lam.max():
        raise TruncationError(
            f"band edge {band[1]:.3g} too close to the truncation "
            f"lambda_max = {lam.max():.3g}; raise N"
        )
    idx = band_indices(basis, band)
    if len(idx) == 0:
        raise ValueError("band contains no eigenvalues at this truncation")
    sub = G[np.ix_(idx, idx)]
    w, V = np.linalg.eigh(sub)
    if w[0] < -1e-10:
        raise RuntimeError(f"Gramian compression not PSD: {w[0]:.3e}")
    vec = np.zeros(basis.size, dtype=complex)
    vec[idx] = V[:, 0]
    return float(max(w[0], 0.0)), vec


@dataclass
class GramianReport:
    T: float
    band: tuple
    min_eig: float
    min_vector: list
    N_used: int
    classical_K: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "band": list(self.band),
            "min_eig": self.min_eig,
            "cost_proxy": math.inf if self.min_eig == 0 else 1.0 / self.min_eig,
            "min_vector_re": [float(np.real(v)) for v in self.min_vector],
            "min_vector_im": [float(np.imag(v)) for v in self.min_vector],
            "N_used": self.N_used,
            "classical_K": self.classical_K,
        }


# -- coherent states --------------------------------------------------------------------


def _alpha(nu: float, x0: float, xi0: float) -> complex:
    return math.sqrt(nu / 2.0) * (x0 + 1j * xi0 / nu)


def _coeffs_1d(nu: float, N: int, x0: float, xi0: float) -> np.ndarray:
    a = _alpha(nu, x0, xi0)
    n = np.arange(N)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, N)))))
    mod = np.exp(-0.5 * abs(a) ** 2 + n * math.log(max(abs(a), 1e-300)) - 0.5 * log_fact)
    phase = np.exp(1j * n * np.angle(a)) if a != 0 else np.where(n == 0, 1.0 + 0j, 0.0)
    c = mod * phase
    if a == 0:
        c = np.zeros(N, dtype=complex)
        c[0] = 1.0
    return c


def coherent_coeffs(basis: HermiteBasis, rho0: PhasePoint) -> np.ndarray:
    """Hermite coefficients of the coherent state centered at rho0; per-axis
    closed form c_n = e^{-|a|^2/2} a^n / sqrt(n!) with
    a = sqrt(nu/2)(x0 + i xi0/nu)."""
    x0, xi0 = rho0.as_arrays()
    a2 = sum(abs(_alpha(basis.nu, x0[j], xi0[j])) ** 2 for j in range(basis.d))
    if a2 > 0.5 * basis.N:
        raise TruncationError(
            f"|alpha|^2 = {a2:.3g} exceeds the N/2 mass-capture bound (N = {basis.N})"
        )
    per_axis = [_coeffs_1d(basis.nu, basis.N, x0[j], xi0[j]) for j in range(basis.d)]
    c = per_axis[0]
    if basis.d == 2:
        c = (per_axis[0][:, None] * per_axis[1][None, :]).ravel()
    mass = float(np.vdot(c, c).real)
    if mass < 1.0 - 1e-8:
        raise TruncationError(f"captured mass {mass:.12f} < 1 - 1e-8; raise N")
    return c


def propagate_coherent(
    basis: HermiteBasis, rho0: PhasePoint, t: float
) -> tuple[PhasePoint, complex]:
    """Exact propagation: e^{-itP} phi_{rho0} = phase * phi_{rho_t} with
    rho_t the classical flow and phase = e^{-i nu t d / 2}."""
    freqs = (basis.nu,) * basis.d
    rho_t = exact_harmonic_flow(freqs, rho0, t)
    phase = complex(np.exp(-0.5j * basis.nu * t * basis.d))
    return rho_t, phase


def propagate_coeffs(basis: HermiteBasis, c: np.ndarray, t: float) -> np.ndarray:
    """Spectral propagation of a coefficient vector."""
    return c * np.exp(-1j * basis.eigenvalues * t)


# -- coherent mass in a set ---------------------------------------------------------------


def _erf_mass_interval(nu: float, x0: float, a: float, b: float) -> float:
    s = math.sqrt(nu)
    return 0.5 * (math.erf(s * (b - x0)) - math.erf(s * (a - x0)))


def _radial_halfline_moment(nu: float, b: float) -> float:
    """int_0^inf r e^{-nu (r-b)^2} dr."""
    s = math.sqrt(nu)
    return math.exp(-nu * b * b) / (2.0 * nu) + 0.5 * b * (SQRT_PI / s) * (
        1.0 + math.erf(s * b)
    )


def coherent_mass_in_set(rho: PhasePoint, s: ObservationSet, nu: float) -> float:
    """int_omega |phi_rho|^2 dx with |phi_rho|^2 = (nu/pi)^{d/2}
    e^{-nu|x-x0|^2}; erf arithmetic in 1D and radially, angular Gauss
    quadrature for conical sets in 2D."""
    x0, _ = rho.as_arrays()
    d = len(x0)
    if isinstance(s, FullSpace):
        return 1.0
    if d == 1:
        span = 8.0 / math.sqrt(nu)
        total = 0.0
        for a, b in _intervals_1d(s, abs(x0[0]) + span):
            total += _erf_mass_interval(nu, x0[0], a, b)
        return total
    if isinstance(s, (ConicalArcs, TwoCones)):
        arcs = _as_arcs(s)
        r0 = float(np.hypot(x0[0], x0[1]))
        total = 0.0
        for a, b in arcs.arcs:
            length = (b - a) % (2 * math.pi)
            if length == 0:
                length = 2 * math.pi
            zt, wt = leggauss(400)
            th = a + 0.5 * length * (zt + 1.0)
            w = 0.5 * length * wt
            proj = x0[0] * np.cos(th) + x0[1] * np.sin(th)
            radial = np.array([_radial_halfline_moment(nu, float(bb)) for bb in proj])
            total += float(
                np.sum(w * np.exp(-nu * (r0 * r0 - proj * proj)) * radial)
            ) * (nu / math.pi)
        return total
    if isinstance(s, Spherical):
        # angular Gauss x exact radial erf on each interval
        zt, wt = leggauss(400)
        th = math.pi * (zt + 1.0)
        w = math.pi * wt
        r0 = float(np.hypot(x0[0], x0[1]))
        proj = x0[0] * np.cos(th) + x0[1] * np.sin(th)
        span = r0 + 8.0 / math.sqrt(nu)
        total = 0.0
        s_nu = math.sqrt(nu)
        for a, b in s.radii.materialize(span):
            b = min(b, span)
            if b <= a:
                continue
            # int_a^b r e^{-nu(r - proj)^2} dr, vectorized over theta
            t_a, t_b = s_nu * (a - proj), s_nu * (b - proj)
            moment = (np.exp(-t_a * t_a) - np.exp(-t_b * t_b)) / (2.0 * nu) + (
                proj * SQRT_PI / (2.0 * s_nu)
            ) * (np.vectorize(math.erf)(t_b) - np.vectorize(math.erf)(t_a))
            total += float(np.sum(w * np.exp(-nu * (r0 * r0 - proj * proj)) * moment)) * (
                nu / math.pi
            )
        return total
    raise ValueError(f"no closed-form mass for {type(s).__name__}")


# -- Gaussian phase-space pairing -----------------------------------------------------------


def gaussian_phase_space_average(
    f: Callable[[PhasePoint], float],
    rho0: PhasePoint,
    cutoff: float = 6.0,
    nodes: int = 16,
) -> float:
    """pi^{-d} int f(rho0 + rho) e^{-|rho|^2} d rho over phase space R^{2d},
    by tensor Gauss-Hermite quadrature with nodes beyond the cutoff radius
    dropped (tail controlled by e^{-A^2/2})."""
    from numpy.polynomial.hermite import hermgauss

    x0, xi0 = rho0.as_arrays()
    d = len(x0)
    z, w = hermgauss(nodes)
    keep = np.abs(z) <= cutoff
    z, w = z[keep], w[keep]
    grids = np.meshgrid(*([z] * (2 * d)), indexing="ij")
    weights = np.ones_like(grids[0])
    for axes in np.meshgrid(*([w] * (2 * d)), indexing="ij"):
        weights = weights * axes
    pts = np.stack([g.ravel() for g in grids], axis=1)
    total = 0.0
    wflat = weights.ravel()
    for k in range(len(pts)):
        dx = pts[k, :d]
        dxi = pts[k, d:]
        rho = PhasePoint(tuple((x0 + dx).tolist()), tuple((xi0 + dxi).tolist()))
        total += wflat[k] * f(rho)
    return total / math.pi ** d
