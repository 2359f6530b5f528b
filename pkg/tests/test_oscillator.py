import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obslab.intervals import ArithmeticTail, GeometricAnnuliTail, IntervalUnion
from obslab.oscillator import (
    AvoidingTrajectory,
    BracketingError,
    IsotropyError,
    OscillatorSpec,
    _detect_rational,
    avoiding_trajectory_two_cones,
    circular_orbit,
    classify_spherical,
    conical_axis_escape,
    convergents,
    critical_trajectory,
    d0,
    lambda_of_mu,
    lambda_theta,
    t_star_bounds,
    trajectory_radius_ratio,
    two_cones_T0,
)

GOLDEN = (1 + math.sqrt(5)) / 2

coprime_pairs = [(1, 1), (2, 1), (3, 1), (3, 2), (4, 3), (5, 2), (5, 3), (7, 5)]


class TestLambda:
    @pytest.mark.parametrize(
        "p,q,want",
        [
            (1, 1, math.tan(math.pi / 4)),  # = 1
            (3, 1, math.tan(math.pi / 8)),
            (7, 5, math.tan(math.pi / 24)),
            (2, 1, math.sin(math.pi / 6)),  # = 1/2
            (4, 3, math.sin(math.pi / 14)),
            (5, 2, math.sin(math.pi / 14)),
        ],
    )
    def test_closed_form_values(self, p, q, want):
        assert lambda_of_mu((p, q)) == pytest.approx(want, abs=1e-15)

    def test_irrational_is_zero(self):
        assert lambda_of_mu(None) == 0.0

    @pytest.mark.parametrize("p,q", coprime_pairs)
    def test_parity_rule(self, p, q):
        c = math.pi / (2 * (p + q))
        want = math.tan(c) if (p - q) % 2 == 0 else math.sin(c)
        assert lambda_of_mu((p, q)) == want


class TestD0AndLambdaTheta:
    def test_d0_vanishes_on_lattice(self):
        # p theta1 - q theta2 in pi Z  =>  d0 = 0
        assert d0(math.pi / 3, 0.0, 3, 1) == pytest.approx(0.0, abs=1e-15)
        assert d0(0.0, math.pi / 2, 4, 2) == pytest.approx(0.0, abs=1e-15)

    def test_d0_max_is_one(self):
        # half-integer offset: distance to the lattice is maximal
        assert d0(math.pi / (2 * 3), 0.0, 3, 1) == pytest.approx(1.0)

    @given(
        t1=st.floats(-10.0, 10.0),
        t2=st.floats(-10.0, 10.0),
        k=st.integers(-3, 3),
    )
    @settings(max_examples=60, deadline=None)
    def test_d0_periodic_and_bounded(self, t1, t2, k):
        val = d0(t1, t2, 3, 2)
        assert 0.0 <= val <= 1.0 + 1e-12
        assert d0(t1 + k * math.pi / 3, t2, 3, 2) == pytest.approx(val, abs=1e-9)

    @pytest.mark.parametrize("p,q", [(3, 1), (4, 3), (7, 5), (2, 1)])
    @given(t1=st.floats(0.0, math.pi), t2=st.floats(0.0, math.pi))
    @settings(max_examples=40, deadline=None)
    def test_lambda_theta_bounded_by_lambda(self, p, q, t1, t2):
        lt = lambda_theta(t1, t2, p, q)
        assert lt <= lambda_of_mu((p, q)) + 1e-12

    @pytest.mark.parametrize("p,q", [(3, 1), (4, 3), (7, 5), (2, 1)])
    def test_lambda_theta_attains_lambda_at_worst_phase(self, p, q):
        # phases realizing d0 = 1 give exactly Lambda
        t1 = math.pi / (2 * p)
        assert lambda_theta(t1, 0.0, p, q) == pytest.approx(lambda_of_mu((p, q)), abs=1e-12)


class TestCriticalTrajectory:
    @pytest.mark.parametrize("p,q", [(2, 1), (3, 2), (4, 3), (7, 5), (5, 2)])
    def test_radius_ratio_reproduces_lambda(self, p, q):
        amps, phases = critical_trajectory(p, q)
        got = trajectory_radius_ratio(p, q, amps, phases)
        assert got == pytest.approx(lambda_of_mu((p, q)), abs=1e-12)

    def test_isotropic_rejected(self):
        with pytest.raises(IsotropyError):
            critical_trajectory(1, 1)

    def test_unit_energy_normalization(self):
        amps, _ = critical_trajectory(4, 3)
        assert sum(a * a for a in amps) == pytest.approx(1.0)


class TestTwoConesTiming:
    def test_T0_values(self):
        # T0 = (pi/nu+) (2 + floor(nu+/nu-))
        assert two_cones_T0(2.0, 1.0) == pytest.approx((math.pi / 2.0) * 4)
        assert two_cones_T0(1.0, 1.0) == pytest.approx(math.pi * 3)

    def test_T0_jump_at_integer_ratio(self):
        below = two_cones_T0(2.0 - 1e-9, 1.0)
        above = two_cones_T0(2.0 + 1e-9, 1.0)
        assert above > below  # the floor term jumps as the ratio passes an integer

    @pytest.mark.parametrize("nus", [(1.0, 2.0), (1.0, 3.9)])
    @pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
    def test_avoiding_trajectory_never_enters(self, nus, eps):
        from obslab.sets import TwoCones

        avoid = avoiding_trajectory_two_cones(nus[0], nus[1], eps)
        assert isinstance(avoid, AvoidingTrajectory)
        cone = TwoCones(eps)
        ts = np.linspace(0.0, avoid.T_avoid, 200_001)
        hits = cone.contains_many(avoid.positions(ts))
        assert not np.any(hits)

    def test_avoiding_time_close_to_T0(self):
        avoid = avoiding_trajectory_two_cones(1.0, 2.0, 0.1)
        T0 = two_cones_T0(2.0, 1.0)
        assert 0.9 * T0 < avoid.T_avoid < T0

    def test_avoiding_epsilon_domain(self):
        with pytest.raises(ValueError):
            avoiding_trajectory_two_cones(1.0, 2.0, 2.0)


class TestConvergents:
    def test_golden_ratio_gives_fibonacci(self):
        conv = convergents(GOLDEN, count=12)
        fib = [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)]
        assert conv.entries[: len(fib)] == tuple(fib)
        assert not conv.terminated_rational

    def test_rational_terminates(self):
        conv = convergents(7 / 5)
        assert conv.terminated_rational
        assert conv.entries[-1] == (7, 5)

    @pytest.mark.parametrize("mu", [GOLDEN, math.pi / 3, math.sqrt(2)])
    def test_quadratic_approximation_bound(self, mu):
        conv = convergents(mu, count=10)
        for p, q in conv.entries:
            assert abs(mu - Fraction(p, q)) < Fraction(1, q * q)

    def test_denominators_nondecreasing(self):
        conv = convergents(math.e - 1)
        qs = [q for _, q in conv.entries]
        assert qs == sorted(qs)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            convergents(0.0)


class TestRationalDetection:
    def test_small_rationals(self):
        assert _detect_rational(4 / 3) == (4, 3)
        assert _detect_rational(7 / 5) == (7, 5)
        assert _detect_rational(2.0) == (2, 1)

    def test_golden_ratio_is_irrational(self):
        # nearest Fibonacci quotient is within 7e-13, but the tolerance
        # tightens with the denominator, so it is correctly rejected
        assert _detect_rational(GOLDEN) is None
        assert _detect_rational(math.sqrt(2)) is None


class TestTStarBounds:
    def test_golden_brackets(self):
        lam = 0.3
        out = t_star_bounds(GOLDEN, lam)
        assert out["rational"] is None
        assert out["q_j1"] <= 1.0 / lam < 6 * math.pi / lam <= out["q_j2"]
        assert out["lower"] == pytest.approx(2 * math.pi * out["q_j1"])
        assert out["lower"] < out["upper"]

    def test_rational_passthrough(self):
        out = t_star_bounds(3 / 2, 0.5)
        assert out["rational"] == [3, 2]
        assert out["upper"] == pytest.approx(math.pi * 3 / 1.5)

    def test_kappa_domain(self):
        with pytest.raises(ValueError):
            t_star_bounds(GOLDEN, 0.0)

    def test_bracketing_error_when_list_too_short(self):
        with pytest.raises(BracketingError):
            t_star_bounds(GOLDEN, 1e-3, count=3)


class TestClassify:
    def test_bounded_set_never_observable(self):
        spec = OscillatorSpec((1.0, 4 / 3))
        out = classify_spherical(spec, IntervalUnion(((1.0, 50.0),)))
        assert out["kappa_star"] == 0.0
        assert not out["observable"]

    def test_thick_set_observable_for_rational(self):
        spec = OscillatorSpec((1.0, 4 / 3))
        I = IntervalUnion((), tail=ArithmeticTail(0.5, 1.0, 0.5))
        out = classify_spherical(spec, I)
        assert out["rational"] == [4, 3]
        assert out["lambda"] == pytest.approx(math.sin(math.pi / 14))
        assert out["observable"]

    def test_sparse_geometric_below_threshold(self):
        spec = OscillatorSpec((1.0, 4 / 3))
        I = IntervalUnion((), tail=GeometricAnnuliTail(5.0, 0.01))
        out = classify_spherical(spec, I)
        assert out["kappa_star"] < out["lambda"]
        assert not out["observable"]

    def test_isotropic_rejected(self):
        with pytest.raises(IsotropyError):
            classify_spherical(OscillatorSpec((1.0, 1.0)), IntervalUnion(()))


class TestOscillatorSpec:
    def test_freqs_sorted_and_mu(self):
        spec = OscillatorSpec((2.0, 1.0))
        assert spec.freqs == (1.0, 2.0)
        assert spec.mu == 2.0
        assert spec.rational == (2, 1)

    def test_period_rational(self):
        spec = OscillatorSpec((1.0, 1.5))  # common period 4 pi
        assert spec.period == pytest.approx(4 * math.pi)

    def test_to_potential_round_trip(self):
        spec = OscillatorSpec((1.0, 3.0))
        H = spec.to_potential()
        assert np.allclose(np.sqrt(np.linalg.eigvalsh(H.A)), spec.freqs)


class TestCircularOrbitAndEscape:
    def test_isotropic_circle(self):
        from obslab.flow import integrate_flow
        from obslab.potentials import Harmonic

        spec = Harmonic(np.eye(2))
        out = circular_orbit(spec, (2.0, 0.0))
        assert out["omega"] == pytest.approx(1.0)
        traj = integrate_flow(spec, out["rho0"], out["period"], dt=1e-3)
        radii = np.sqrt((traj.xs * traj.xs).sum(axis=1))
        assert np.max(np.abs(radii - 2.0)) < 1e-6  # dt^2 integrator wiggle

    def test_anisotropic_rejected(self):
        from obslab.potentials import Harmonic

        with pytest.raises(ValueError):
            circular_orbit(Harmonic(np.diag([1.0, 2.0])), (2.0, 0.0))

    def test_axis_escape_exponent(self):
        from obslab.potentials import Harmonic
        from obslab.sets import TwoCones

        out = conical_axis_escape(
            Harmonic(np.eye(2)), TwoCones(math.pi / 4, basis_angle=math.pi / 4), R=1.0
        )
        assert out is not None
        assert out["exponent"] == pytest.approx(-1.0, abs=1e-3)

    def test_no_escape_when_cone_covers_axes(self):
        from obslab.potentials import Harmonic
        from obslab.sets import TwoCones

        assert conical_axis_escape(Harmonic(np.eye(2)), TwoCones(0.3), R=1.0) is None
