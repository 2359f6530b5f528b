"""Acceptance gate: one test per shipped guarantee, one PASS/FAIL line each.

Run with -s to see the summary lines; every tolerance is stated inline.
"""

import json
import math
import warnings

import numpy as np
import pytest
from scipy import integrate as scipy_integrate

from obslab.classical import UndersamplingWarning, kfrak_estimate, time_in_ball
from obslab.flow import (
    PhasePoint,
    exact_harmonic_flow,
    flow_divergence,
    integrate_flow,
    sample_harmonic,
)
from obslab.intervals import (
    ArithmeticTail,
    GeometricAnnuliTail,
    IntervalUnion,
    kappa_star,
)
from obslab.oscillator import (
    avoiding_trajectory_two_cones,
    aspect_ratio_bruteforce,
    critical_trajectory,
    lambda_of_mu,
    t_star_bounds,
    trajectory_radius_ratio,
    two_cones_T0,
)
from obslab.potentials import Harmonic, Perturbed, PowerConfining
from obslab.quantum import (
    HermiteBasis,
    band_obs_cost,
    coherent_coeffs,
    coherent_mass_in_set,
    gramian,
    indicator_matrix,
    propagate_coeffs,
    propagate_coherent,
)
from obslab.sets import ConicalArcs, FullSpace, Spherical, TwoCones

GOLDEN = (1 + math.sqrt(5)) / 2


def verdict(num: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d}: {detail}", flush=True)
    assert ok, f"criterion {num}: {detail}"


def test_01_flow_exactness():
    """10 random 2D harmonic specs: Verlet vs closed form < 1e-5, drift < 1e-8."""
    rng = np.random.default_rng(7)
    worst_err, worst_drift = 0.0, 0.0
    for _ in range(10):
        Q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
        nu = rng.uniform(0.5, 1.5, size=2)
        A = Q @ np.diag(nu**2) @ Q.T
        spec = Harmonic(A)
        rho0 = PhasePoint(tuple(rng.normal(size=2)), tuple(rng.normal(size=2)))
        T = 10 * 2 * math.pi / nu.min()
        traj = integrate_flow(spec, rho0, T, dt=1e-4)
        evals, Qh = np.linalg.eigh(A)
        nus = np.sqrt(evals)
        y0 = PhasePoint(tuple(Qh.T @ traj.xs[0]), tuple(Qh.T @ traj.xis[0]))
        ys, etas = sample_harmonic(nus, y0, traj.times)
        err = max(
            np.max(np.abs(ys @ Qh.T - traj.xs)), np.max(np.abs(etas @ Qh.T - traj.xis))
        )
        E = traj.energies(spec)
        drift = float(np.max(np.abs(E - E[0])) / E[0])
        worst_err, worst_drift = max(worst_err, err), max(worst_drift, drift)
    verdict(
        1,
        worst_err < 1e-5 and worst_drift < 1e-8,
        f"sup error {worst_err:.2e} (< 1e-5), relative drift {worst_drift:.2e} (< 1e-8)",
    )


def test_02_lambda_oracle_agreement():
    """All coprime p + q <= 9: closed form vs brute-force search within 1e-2."""
    pairs = [
        (p, q)
        for s in range(2, 10)
        for q in range(1, s)
        for p in (s - q,)
        if p >= q and math.gcd(p, q) == 1
    ]
    worst = 0.0
    for p, q in pairs:
        got = aspect_ratio_bruteforce(p, q)
        worst = max(worst, abs(got - lambda_of_mu((p, q))))
    verdict(
        2,
        worst <= 1e-2,
        f"{len(pairs)} coprime pairs, max |brute - closed form| = {worst:.2e} (<= 1e-2)",
    )


def test_03_critical_trajectory():
    """Radius ratio of the critical trajectory reproduces Lambda to 1e-6."""
    worst = 0.0
    for p, q in [(2, 1), (3, 1), (3, 2), (4, 3), (5, 2)]:
        amps, phases = critical_trajectory(p, q)
        got = trajectory_radius_ratio(p, q, amps, phases)
        worst = max(worst, abs(got - lambda_of_mu((p, q))))
    verdict(3, worst < 1e-6, f"max ratio deviation over 5 pairs = {worst:.2e} (< 1e-6)")


def test_04_two_cones_dichotomy():
    """eps = 0.2 at T = T0: positive constant for nu=(1,2), null for nu=(1,1);
    avoiding trajectories never meet the doubled cone; exact T0 jump at 4."""
    eps = 0.2
    shells = [100.0 * 4**k for k in range(6)]
    pos = kfrak_estimate(
        Harmonic(np.diag([1.0, 4.0])), TwoCones(eps), two_cones_T0(2.0, 1.0), shells
    ).estimate
    null = kfrak_estimate(
        Harmonic(np.eye(2)), TwoCones(eps), two_cones_T0(1.0, 1.0), shells
    ).estimate
    hits = 0
    for nu2 in (2.0, 3.9):
        avoid = avoiding_trajectory_two_cones(1.0, nu2, eps)
        ts = np.linspace(0.0, avoid.T_avoid, 1_000_001)
        hits += int(np.count_nonzero(TwoCones(2 * eps).contains_many(avoid.positions(ts))))
    jump = two_cones_T0(4.0, 1.0) - two_cones_T0(3.9, 1.0)
    want_jump = math.pi / 4.0 * 6 - math.pi / 3.9 * 5
    verdict(
        4,
        pos >= 1e-3 and null <= 1e-4 and hits == 0 and jump == pytest.approx(want_jump, abs=1e-15),
        f"kfrak(1,2) = {pos:.4f} (>= 1e-3), kfrak(1,1) = {null:.2e} (<= 1e-4), "
        f"doubled-cone hits = {hits}, T0 jump error = {abs(jump - want_jump):.1e}",
    )


def test_05_escape_scaling():
    """Ball-time decay exponent -1/(2m) within 0.05 over four energy decades."""
    energies = np.geomspace(1e2, 1e6, 9)
    slopes = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndersamplingWarning)
        for m in (1, 2):
            spec = PowerConfining(m, 1.0, 1)
            times = [
                time_in_ball(spec, PhasePoint((0.0,), (math.sqrt(2 * E),)), 1.0, 20.0, dt=1e-3)
                for E in energies
            ]
            slopes[m] = float(np.polyfit(np.log(energies), np.log(times), 1)[0])
    ok = abs(slopes[1] + 0.5) < 0.05 and abs(slopes[2] + 0.25) < 0.05
    verdict(
        5,
        ok,
        f"slopes m=1: {slopes[1]:.3f} (want -0.5, +/-0.05), m=2: {slopes[2]:.3f} (want -0.25)",
    )


def test_06_subprincipal_stability():
    """Flow deviation under a bounded bump perturbation shows no growth trend
    in energy (log-log slope < 0.02)."""
    base = Harmonic(np.diag([1.0, 2.0]))
    pert = Perturbed(base, (0.5, -0.3), 0.8, 1.2)
    rng = np.random.default_rng(3)
    energies = np.geomspace(1e2, 1e6, 9)
    devs = []
    for E in energies:
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        rho0 = PhasePoint((0.0, 0.0), tuple(math.sqrt(2 * E) * v))
        devs.append(flow_divergence(base, pert, rho0, T=5.0, dt=5e-4))
    slope = float(np.polyfit(np.log(energies), np.log(devs), 1)[0])
    verdict(6, slope < 0.02, f"deviation log-log slope = {slope:.3f} (< 0.02)")


def test_07_kappa_star_fixtures():
    """Half-filled arithmetic union -> 1; bounded -> exactly 0; geometric
    annuli match the overlap oracle s/theta."""
    half = kappa_star(IntervalUnion((), tail=ArithmeticTail(0.0, 1.0, 0.5)))
    bounded = kappa_star(IntervalUnion(((1.0, 2.0), (5.0, 9.0))))
    worst_geo = 0.0
    for ratio, fill in [(2.0, 0.3), (3.0, 0.5), (5.0, 0.2), (1.5, 0.6)]:
        tail = GeometricAnnuliTail(ratio, fill)
        got = kappa_star(IntervalUnion((), tail=tail))
        worst_geo = max(worst_geo, abs(got - tail.s / ratio))
    verdict(
        7,
        abs(half - 1.0) < 1e-2 and bounded == 0.0 and worst_geo < 1e-2,
        f"half-filled = {half:.4f} (1 +/- 1e-2), bounded = {bounded} (exact 0), "
        f"geometric worst dev = {worst_geo:.2e} (< 1e-2)",
    )


def _aligned_geometric_shells(theta: float) -> list[float]:
    # shells aligned with the annuli so the critical trajectory's outer
    # radius lands inside a gap: unit critical energy 2/3, scaled to c^2
    c = 0.98 * theta**3
    E0 = (2.0 / 3.0) * c * c
    return [E0 * theta ** (2 * k) for k in range(4)]


def test_08_spherical_classification():
    """mu = 4/3: kappa_star below sin(pi/14) -> null tail constant; above ->
    positive within pi q / nu1; golden-ratio mu at kappa_star ~ 0.3 ->
    observable with finite convergent-bracketed critical time."""
    lam = math.sin(math.pi / 14)
    theta = 5.0
    spec = Harmonic(np.diag([1.0, (4.0 / 3.0) ** 2]))
    T = 3 * math.pi  # pi q / nu1 with q = 3
    shells = _aligned_geometric_shells(theta)

    def omega(kappa_target: float) -> Spherical:
        fill = (kappa_target * theta - 1.0) / (theta - 1.0)
        return Spherical(IntervalUnion((), tail=GeometricAnnuliTail(theta, fill)), 2)

    below_kappa = kappa_star(IntervalUnion((), tail=omega(0.205).radii.tail))
    below = kfrak_estimate(spec, omega(0.205), T, shells).estimate
    above_kappa = kappa_star(IntervalUnion((), tail=omega(1.5 * lam).radii.tail))
    above = kfrak_estimate(spec, omega(1.5 * lam), T, shells).estimate

    fill_03 = (0.3 * theta - 1.0) / (theta - 1.0)
    I_irr = IntervalUnion((), tail=GeometricAnnuliTail(theta, fill_03))
    ks_irr = kappa_star(I_irr)
    stars = t_star_bounds(GOLDEN, ks_irr)
    irr_ok = (
        ks_irr > 0.25
        and stars["rational"] is None
        and 0.0 < stars["lower"] < stars["upper"] < math.inf
    )
    verdict(
        8,
        below_kappa < lam and below <= 1e-4 and above_kappa > lam and above >= 1e-3 and irr_ok,
        f"below: kappa = {below_kappa:.4f} < {lam:.4f}, kfrak = {below:.1e} (<= 1e-4); "
        f"above: kappa = {above_kappa:.4f}, kfrak = {above:.4f} (>= 1e-3); "
        f"golden: kappa = {ks_irr:.4f}, T* in [{stars['lower']:.1f}, {stars['upper']:.1f}]",
    )


def test_09_quantum_classical_gramian():
    """1D nu = 1, T = 2 pi, N = 256: full-space floor exactly 2 pi; weakly
    thick bands stable within 20%; bounded sparse-gap set at least 5x weaker
    on the same bands; coherent-state time-average identity to 1e-6."""
    nu, T, N = 1.0, 2 * math.pi, 256
    basis = HermiteBasis(nu, N, 1)
    lam = basis.eigenvalues
    bands = [(50.0, 100.0), (100.0, 200.0)]

    G_full = gramian(basis, indicator_matrix(basis, FullSpace(1)), T)
    full_eig, _ = band_obs_cost(G_full, basis, bands[0])
    full_ok = abs(full_eig - T) < 1e-8

    thick = Spherical(IntervalUnion((), tail=ArithmeticTail(0.5, 1.0, 0.5)), 1)
    M_thick = indicator_matrix(basis, thick)
    G_thick = gramian(basis, M_thick, T)
    thick_eigs = [band_obs_cost(G_thick, basis, b)[0] for b in bands]
    thick_ok = (
        min(thick_eigs) > 0
        and abs(thick_eigs[0] - thick_eigs[1]) <= 0.2 * max(thick_eigs)
    )

    sparse = Spherical(IntervalUnion(((1.0, 1.5), (4.0, 4.5), (16.0, 16.5))), 1)
    G_sparse = gramian(basis, indicator_matrix(basis, sparse), T)
    sparse_eigs = [band_obs_cost(G_sparse, basis, b)[0] for b in bands]
    ratios = [t / s for t, s in zip(thick_eigs, sparse_eigs)]
    sparse_ok = min(ratios) >= 5.0 and sparse_eigs[1] < sparse_eigs[0]

    rng = np.random.default_rng(1)
    worst_id = 0.0
    for _ in range(10):
        while True:
            x0, xi0 = rng.normal(scale=2.0, size=2)
            if 0.5 * (x0 * x0 + xi0 * xi0) <= 10.0:  # |alpha|^2 <= 10 at nu = 1
                break
        rho = PhasePoint((x0,), (xi0,))
        c = coherent_coeffs(basis, rho)
        lhs = float(np.vdot(c, G_thick @ c).real)
        rhs = scipy_integrate.quad(
            lambda t: coherent_mass_in_set(
                propagate_coherent(basis, rho, t)[0], thick, nu
            ),
            0.0,
            T,
            limit=400,
            epsabs=1e-10,
        )[0]
        worst_id = max(worst_id, abs(lhs - rhs))
    coherent_ok = worst_id < 1e-6

    verdict(
        9,
        full_ok and thick_ok and sparse_ok and coherent_ok,
        f"full-space floor error {abs(full_eig - T):.1e} (< 1e-8); thick bands "
        f"{thick_eigs[0]:.3f}/{thick_eigs[1]:.3f} (within 20%); sparse weaker by "
        f"{min(ratios):.1f}x (>= 5x) and decreasing; coherent identity "
        f"worst {worst_id:.1e} (< 1e-6)",
    )


def test_10_coherent_propagation():
    """Spectral propagation equals transported-Gaussian closed form to 1e-8;
    half-period evolution is exact point reflection to 1e-8."""
    basis = HermiteBasis(1.3, 48, 1)
    rho0 = PhasePoint((1.1,), (-0.6,))
    c0 = coherent_coeffs(basis, rho0)
    worst = 0.0
    for t in (0.37, 1.0, math.pi, 4.4):
        rho_t, phase = propagate_coherent(basis, rho0, t)
        diff = propagate_coeffs(basis, c0, t) - phase * coherent_coeffs(basis, rho_t)
        worst = max(worst, float(np.max(np.abs(diff))))
    half = math.pi / basis.nu
    rho_half, _ = propagate_coherent(basis, rho0, half)
    refl = max(abs(rho_half.x[0] + rho0.x[0]), abs(rho_half.xi[0] + rho0.xi[0]))
    verdict(
        10,
        worst < 1e-8 and refl < 1e-8,
        f"spectral identity worst {worst:.1e} (< 1e-8), reflection error {refl:.1e} (< 1e-8)",
    )


def test_11_isotropic_conical_sufficiency():
    """Full-measure Sigma u -Sigma (complement shrunk to eps-arcs, eps=1e-3):
    band Gramian floor at T = 2 pi / nu within 5% of pi / nu."""
    nu, eps = 1.0, 1e-3
    basis = HermiteBasis(nu, 22, 2)
    arcs = ConicalArcs(((eps, math.pi - eps),))
    M = indicator_matrix(basis, arcs)
    G = gramian(basis, M, 2 * math.pi / nu)
    lam = basis.eigenvalues
    min_eig, _ = band_obs_cost(G, basis, (5.0, 0.8 * float(lam.max())))
    rel = abs(min_eig - math.pi / nu) / (math.pi / nu)
    verdict(11, rel < 0.05, f"band floor {min_eig:.4f} vs pi = {math.pi:.4f}, rel err {rel:.2%} (< 5%)")


def test_12_cli_determinism(tmp_path):
    """Every CLI subcommand, run twice with fixed seeds, emits identical bytes."""
    from click.testing import CliRunner

    from obslab.cli import main

    runner = CliRunner()

    kfrak_cfg = tmp_path / "kfrak.json"
    kfrak_cfg.write_text(
        json.dumps(
            {
                "potential": {"kind": "harmonic", "matrix": [[1.0, 0.0], [0.0, 4.0]]},
                "set": {"kind": "two_cones", "epsilon": 0.2},
                "T": 2 * math.pi,
                "shells": [10.0 * 10**k for k in range(4)],
                "per_shell_budget": 8,
                "samples": 512,
                "seed": 11,
            }
        )
    )
    gram_cfg = tmp_path / "gram.json"
    gram_cfg.write_text(
        json.dumps(
            {
                "nu": 1.0,
                "N": 16,
                "set": {"kind": "half_line", "positive": 0.5},
                "T": 2 * math.pi,
                "band": [1.0, 9.0],
            }
        )
    )
    radii = tmp_path / "radii.json"
    radii.write_text(
        json.dumps(
            {
                "intervals": [],
                "tail": {"kind": "arithmetic", "start": 0.5, "gap": 1.0, "width": 0.5},
            }
        )
    )
    commands = [
        ["flow", "--lissajous", "3:2", "--samples", "64"],
        ["kfrak", "--config", str(kfrak_cfg)],
        ["classify", "--nu1", "1", "--nu2", str(4 / 3), "--set", str(radii)],
        ["gramian", "--config", str(gram_cfg)],
        ["kappa", "--set", str(radii)],
        ["lambda", "--mu", "1.5"],
        ["convergents", "--mu", str(GOLDEN)],
        ["avoid", "--nu1", "1", "--nu2", "2", "--epsilon", "0.1", "--samples", "64"],
        ["coherent", "--nu", "1", "--rho0", "1.0,0.5", "--t", "0.7"],
    ]
    mismatched = []
    for args in commands:
        outs = []
        for _ in range(2):
            res = runner.invoke(main, args, catch_exceptions=False)
            assert res.exit_code == 0, f"{args[0]} failed: {res.output}"
            outs.append(res.output.encode())
        if outs[0] != outs[1]:
            mismatched.append(args[0])
    verdict(
        12,
        not mismatched,
        f"9 subcommands byte-identical across repeats"
        + (f"; mismatches: {mismatched}" if mismatched else ""),
    )
