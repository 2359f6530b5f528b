"""Request handlers shared by the HTTP service and the CLI.

Every handler takes a validated request model and returns a plain dict
report; the canonical hash of the request is embedded so reports are
traceable to their configuration.  All randomness is seeded through the
request, so identical requests produce identical reports.
"""

from __future__ import annotations

import math

import numpy as np

from . import classical, oscillator, quantum
from .flow import PhasePoint, integrate_flow, sample_harmonic
from .intervals import kappa_star
from .potentials import potential_from_dict
from .schemas import (
    AvoidRequest,
    ClassifyRequest,
    CoherentRequest,
    ConvergentsRequest,
    FlowRequest,
    GramianRequest,
    KappaRequest,
    KfrakRequest,
    LambdaRequest,
    config_hash,
    interval_union_from_dict,
    set_from_dict,
)

TOLERANCES = {
    "time_in_set_refinement": 1e-6,
    "rationality": 1e-12,
    "kappa_threshold": 1e-3,
    "quadrature_doubling": 1e-7,
}


def _report(req, body: dict) -> dict:
    out = dict(body)
    out["config_hash"] = config_hash(req)
    out["tolerances"] = TOLERANCES
    return out


def handle_flow(req: FlowRequest) -> dict:
    if req.lissajous is not None:
        p, _, q = req.lissajous.partition(":")
        p, q = int(p), int(q)
        g = math.gcd(p, q)
        p, q = p // g, q // g
        freqs = np.array([float(q), float(p)])
        T = 2.0 * math.pi  # one full period of the closed curve
        rho0 = PhasePoint((0.0, math.sin(math.pi / (2 * p))),
                          (float(q), float(p) * math.cos(math.pi / (2 * p))))
        ts = np.linspace(0.0, T, req.samples + 1)
        xs, xis = sample_harmonic(freqs, rho0, ts)
        rows = np.column_stack([ts, xs, xis])
        body = {"mode": "lissajous", "p": p, "q": q, "T": T, "rows": rows.tolist()}
        return _report(req, body)
    spec = potential_from_dict(req.potential)
    d = len(req.rho0) // 2
    if d != spec.dimension:
        raise ValueError(f"rho0 has dimension {d}, potential expects {spec.dimension}")
    rho0 = PhasePoint(tuple(req.rho0[:d]), tuple(req.rho0[d:]))
    traj = integrate_flow(spec, rho0, req.T, req.dt)
    stride = max(1, (len(traj.times) - 1) // req.samples)
    idx = np.arange(0, len(traj.times), stride)
    if idx[-1] != len(traj.times) - 1:
        idx = np.append(idx, len(traj.times) - 1)
    rows = np.column_stack([traj.times[idx], traj.xs[idx], traj.xis[idx]])
    body = {
        "mode": "integrate",
        "T": req.T,
        "dt": float(traj.times[1] - traj.times[0]),
        "energy0": traj.energy0,
        "rows": rows.tolist(),
    }
    return _report(req, body)


def handle_kfrak(req: KfrakRequest) -> dict:
    spec = potential_from_dict(req.potential)
    s = set_from_dict(req.set)
    shells = tuple(req.shells) if req.shells else classical.DEFAULT_SHELLS
    rep = classical.kfrak_estimate(
        spec, s, req.T,
        shells=shells,
        per_shell_budget=req.per_shell_budget,
        seed=req.seed,
        n_samples=req.samples,
    )
    return _report(req, rep.to_dict())


def handle_classify(req: ClassifyRequest) -> dict:
    spec = oscillator.OscillatorSpec((req.nu1, req.nu2))
    I = interval_union_from_dict(req.radii)
    body = oscillator.classify_spherical(spec, I, r_max=req.r_max)
    if not spec.is_rational and body["kappa_star"] > 0:
        try:
            body["t_star"] = oscillator.t_star_bounds(
                spec.mu, body["kappa_star"], nu1=req.nu1, delta1=req.delta1
            )
        except oscillator.BracketingError as exc:
            body["t_star"] = {"error": str(exc)}
    elif spec.is_rational:
        p, q = spec.rational
        body["t_star"] = {
            "rational": [p, q],
            "lower": 0.0,
            "upper": math.pi * p / spec.freqs[1] if body["observable"] else None,
        }
    return _report(req, body)


def handle_gramian(req: GramianRequest) -> dict:
    basis = quantum.HermiteBasis(req.nu, req.N, req.d)
    s = set_from_dict(req.set)
    M = quantum.indicator_matrix(basis, s, check=req.check_quadrature)
    G = quantum.gramian(basis, M, req.T)
    lam = basis.eigenvalues
    band = tuple(req.band) if req.band else (0.0, 0.8 * float(lam.max()))
    min_eig, vec = quantum.band_obs_cost(G, basis, band)
    rep = quantum.GramianReport(req.T, band, min_eig, list(vec), basis.size)
    body = rep.to_dict()
    body["nu"] = req.nu
    body["d"] = req.d
    return _report(req, body)


def gramian_matrix(req: GramianRequest) -> tuple[dict, np.ndarray]:
    """The Gramian itself, for binary dumps (header dict + complex matrix)."""
    basis = quantum.HermiteBasis(req.nu, req.N, req.d)
    s = set_from_dict(req.set)
    M = quantum.indicator_matrix(basis, s, check=req.check_quadrature)
    G = quantum.gramian(basis, M, req.T)
    header = {
        "d": req.d,
        "N": req.N,
        "T": req.T,
        "band": req.band,
        "layout": "row-major float64 little-endian, real block then imaginary block",
    }
    return header, G


def handle_kappa(req: KappaRequest) -> dict:
    I = interval_union_from_dict(req.radii)
    ks = kappa_star(I, r_max=req.r_max, grid=req.grid, threshold=req.threshold)
    return _report(req, {"kappa_star": ks, "bounded": I.bounded})


def handle_lambda(req: LambdaRequest) -> dict:
    if req.ratio is not None:
        p, _, q = req.ratio.partition(":")
        p, q = int(p), int(q)
        g = math.gcd(p, q)
        rational = (p // g, q // g)
        mu = p / q
    else:
        mu = req.mu
        rational = oscillator._detect_rational(mu)
    val = oscillator.lambda_of_mu(rational)
    return _report(
        req,
        {
            "mu": mu,
            "rational": list(rational) if rational else None,
            "lambda": val,
            "parity": None
            if rational is None
            else ("even" if (rational[0] - rational[1]) % 2 == 0 else "odd"),
        },
    )


def handle_convergents(req: ConvergentsRequest) -> dict:
    conv = oscillator.convergents(req.mu, req.count)
    return _report(
        req,
        {
            "mu": req.mu,
            "entries": [[p, q] for p, q in conv.entries],
            "terminated_rational": conv.terminated_rational,
        },
    )


def handle_avoid(req: AvoidRequest) -> dict:
    avoid = oscillator.avoiding_trajectory_two_cones(req.nu1, req.nu2, req.epsilon)
    from .sets import TwoCones

    omega2 = TwoCones(2.0 * req.epsilon)
    ts = np.linspace(0.0, avoid.T_avoid, req.samples + 1)
    xs = avoid.positions(ts)
    hit = int(np.count_nonzero(omega2.contains_many(xs)))
    body = {
        "nu1": req.nu1,
        "nu2": req.nu2,
        "epsilon": req.epsilon,
        "actions": list(avoid.actions),
        "phases": list(avoid.phases),
        "sign": avoid.sign,
        "delta": avoid.delta,
        "T0": oscillator.two_cones_T0(req.nu2, req.nu1),
        "T_avoid": avoid.T_avoid,
        "samples_in_doubled_cone": hit,
        "rows": np.column_stack([ts, xs]).tolist(),
    }
    return _report(req, body)


def handle_coherent(req: CoherentRequest) -> dict:
    basis = quantum.HermiteBasis(req.nu, req.N, req.d)
    rho0 = PhasePoint(tuple(req.rho0[: req.d]), tuple(req.rho0[req.d :]))
    c0 = quantum.coherent_coeffs(basis, rho0)
    rho_t, phase = quantum.propagate_coherent(basis, rho0, req.t)
    ct_spectral = quantum.propagate_coeffs(basis, c0, req.t)
    ct_closed = phase * quantum.coherent_coeffs(basis, rho_t)
    mismatch = float(np.max(np.abs(ct_spectral - ct_closed)))
    body = {
        "nu": req.nu,
        "d": req.d,
        "t": req.t,
        "rho_t": {"x": list(rho_t.x), "xi": list(rho_t.xi)},
        "phase_re": phase.real,
        "phase_im": phase.imag,
        "coeff_mismatch": mismatch,
        "mass": float(np.vdot(c0, c0).real),
    }
    return _report(req, body)
