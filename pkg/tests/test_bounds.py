from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import const_land, varying_land
from metaeq.bounds import (BoundSpec, check_lb_hypotheses, check_ub_hypotheses, constant_C4, two_sided_accuracy,
                           corollary2_schedule, derive, lb_probability_bound, lower_bound_fn, phi_value,
                           solve_q_alpha, theorem_m, two_sided_bound, ub_probability_bound, upper_bound_fn)
from metaeq.colonization import ColonizationFunction
from metaeq.errors import ConfigError, DomainError, NotApplicable, PreconditionError
from metaeq.levins import q_alpha

KINDS = ("linear", "saturating", "exponential")


def grid_scan_root(f, rho, e, alpha, count=1_000_001):
    """Largest sign change of (1 - x) f(x rho) - alpha e x on a uniform grid, refined by secant."""
    x = np.linspace(0.0, 1.0, count)
    h = (1 - x) * f(x * rho) - alpha * e * x
    pos = np.flatnonzero(h[1:] > 0)
    if pos.size == 0:
        return 0.0
    k = pos[-1] + 1
    x0, x1, h0, h1 = x[k], x[k + 1], h[k], h[k + 1]
    return float(x0 - h0 * (x1 - x0) / (h1 - h0))


def ring_spec(**kw):
    base = dict(center=(0.5,), t=0.49, alpha1=0.55, alpha2=1 - 0.4950495049506535, beta=1.01, beta_prime=1.225)
    base.update(kw)
    return BoundSpec(**base)


class TestQAlpha:
    def test_linear_closed_form_example(self, f_lin):
        assert float(q_alpha(f_lin, 0.8, 0.2, 1.0)) == pytest.approx(0.75, abs=1e-12)

    def test_through_landscape(self, f_lin):
        # uniform kernel on a torus: rho = a sigma c v_d
        land = const_land(e=0.2, a=0.8 / math.pi, r=0.1, kind="torus")
        assert solve_q_alpha(land, f_lin, np.array([0.3, 0.3])) == pytest.approx(0.75, abs=1e-12)

    def test_subcritical_zero(self, f_sat):
        assert float(q_alpha(f_sat, 0.5, 0.5, 1.0)) == 0.0
        assert float(q_alpha(f_sat, 0.5, 0.4, 1.5)) == 0.0

    def test_saturating_grid_scan(self, f_sat):
        got = float(q_alpha(f_sat, 1.0, 0.1, 1.0))
        assert got == pytest.approx(grid_scan_root(f_sat, 1.0, 0.1, 1.0), abs=1e-9)
        assert got == pytest.approx(0.9 / 1.1, abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_random_grid_scan(self, kind):
        f = ColonizationFunction(kind, 1.3)
        rng = np.random.default_rng(7)
        for _ in range(5):
            rho, e, a = rng.uniform(0.2, 5), rng.uniform(0.05, 1), rng.uniform(0.5, 2)
            assert float(q_alpha(f, rho, e, a)) == pytest.approx(grid_scan_root(f, rho, e, a), abs=1e-9)

    def test_bad_alpha(self, f_sat):
        with pytest.raises(PreconditionError):
            solve_q_alpha(const_land(), f_sat, np.array([0.5, 0.5]), 0.0)

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from(KINDS), st.floats(0.01, 20), st.floats(0.01, 5), st.floats(0.0, 1.0))
    def test_fixed_point_comparison(self, kind, tau, nu, x):
        f = ColonizationFunction(kind)
        q = float(q_alpha(f, tau, nu, 1.0))
        h = (1 - x) * float(f(tau * x)) - nu * x
        if h < -1e-12:
            assert q <= x + 1e-12
        if h > 1e-12:
            assert q >= x - 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.sampled_from(KINDS), st.floats(0.1, 10), st.floats(0.01, 1), st.floats(0.3, 0.99),
           st.floats(0.0, 1.0))
    def test_fbound(self, kind, rho, e, alpha, frac):
        f = ColonizationFunction(kind)
        eta = float(q_alpha(f, rho, e, 1.0))
        assume(0 < eta < 1)
        beta = 1 + frac * (1 / (1 - eta) - 1)
        assume(1 < beta < 1 / (1 - eta))
        # equality for linear f; the root tolerance of eta is amplified by beta
        assert float(q_alpha(f, rho, e, beta)) >= beta * eta + 1 - beta - 2e-12 * (1 + beta)
        assert float(q_alpha(f, rho, e, alpha)) >= alpha * eta - 1e-12

    def test_monotone_in_alpha(self, f_sat):
        land = varying_land(r=0.1)
        z = land.grid(None, 0.1)
        q = [solve_q_alpha(land, f_sat, z, a) for a in (0.7, 1.0, 1.3)]
        assert np.all(q[0] >= q[1]) and np.all(q[1] >= q[2])


class TestUpperLower:
    def test_floor_where_q_vanishes(self, f_sat):
        land = const_land(e=5.0, r=0.2)
        spec = BoundSpec((0.5, 0.5), 0.2, 0.8, 0.7, 1.1, 1.2)
        ub = upper_bound_fn(land, f_sat, spec)
        np.testing.assert_allclose(ub(land.grid(None, 0.1)), 0.3)

    def test_linear_constant_closed_form(self, f_lin):
        land = const_land(e=0.5, r=0.1, kind="torus")
        rho = math.pi
        for a1, a2 in ((0.9, 0.6), (0.6, 0.55)):
            spec = BoundSpec((0.5, 0.5), 0.2, a1, a2, 1.1, 1.2)
            val = upper_bound_fn(land, f_lin, spec)(np.array([[0.1, 0.7]]))[0]
            assert val == pytest.approx(max(1 - a1 * 0.5 / rho, 1 - a2), abs=1e-12)

    def test_memoized_against_direct(self, f_sat):
        land = varying_land(r=0.1)
        spec = BoundSpec((0.5, 0.5), 0.3, 0.9, 0.6, 1.05, 1.1)
        ub = upper_bound_fn(land, f_sat, spec)
        direct = upper_bound_fn(land, f_sat, spec, memoize=False)
        z = np.random.default_rng(0).random((400, 2))
        err = np.max(np.abs(ub(z) - direct(z)))
        assert ub.error_budget > 0
        assert err <= ub.error_budget

    def test_lower_bound_shape(self, f_sat):
        land = varying_land(r=0.1)
        spec = BoundSpec((0.5, 0.5), 0.3, 0.9, 0.6, 1.05, 1.1, m=50.0)
        lb = lower_bound_fn(land, f_sat, spec)
        assert lb(np.array([[0.8, 0.5]]))[0] == pytest.approx(0.0, abs=1e-12)
        c = np.array([[0.5, 0.5]])
        assert lb(c)[0] == pytest.approx(float(q_alpha(f_sat, land.rho(c), land.e(c), 1.1)[0]), abs=1e-12)
        with pytest.raises(DomainError):
            lb(np.array([[0.1, 0.1]]))

    def test_lower_bound_grid_oracle(self, f_sat):
        land = varying_land(r=0.1)
        spec = BoundSpec((0.5, 0.5), 0.3, 0.9, 0.6, 1.05, 1.1, m=3.0)
        lb = lower_bound_fn(land, f_sat, spec)
        z = land.grid(spec.theta, 0.05)
        dist = 0.3 - np.linalg.norm(z - 0.5, axis=1)
        rho = land.rho(z)
        oracle = np.array([min(3.0 * d, float(q_alpha(f_sat, r, e, 1.1))) for d, r, e in zip(dist, rho, land.e(z))])
        np.testing.assert_allclose(lb(z), oracle, atol=1e-12)

    def test_lower_bound_needs_viability(self, f_sat):
        land = const_land(e=5.0, r=0.2)
        with pytest.raises(PreconditionError):
            lower_bound_fn(land, f_sat, BoundSpec((0.5, 0.5), 0.2, 0.8, 0.7, 1.1, 1.2))


class TestSpec:
    @pytest.mark.parametrize("kw", [dict(alpha1=0.6, alpha2=0.7), dict(alpha2=0.5), dict(alpha1=1.0),
                                    dict(beta=1.0), dict(beta_prime=1.05, beta=1.1), dict(t=0.0),
                                    dict(m=-1.0), dict(theta1=0.5), dict(theta2=1.0)])
    def test_invalid(self, kw):
        base = dict(center=(0.5, 0.5), t=0.2, alpha1=0.8, alpha2=0.7, beta=1.1, beta_prime=1.2)
        base.update(kw)
        with pytest.raises(ConfigError):
            BoundSpec(**base)

    def test_theta_outside_habitat(self, f_sat):
        with pytest.raises(DomainError):
            derive(const_land(), f_sat, BoundSpec((0.1, 0.1), 0.3, 0.8, 0.7, 1.1, 1.2))


class TestConstants:
    def test_theorem_m_hand(self):
        m = theorem_m(0.1, 0.5, 0.05, 0.1, math.pi, 1.0, 1.0)
        assert m == pytest.approx(0.01 * 0.5 * 0.05 / (4 * 0.1 * math.pi ** 2 * (math.pi + 1)), rel=1e-12)
        assert theorem_m(0.1, 0.5, 0.1, 0.1, math.pi, 1.0, 1.0) == pytest.approx(2 * m, rel=1e-12)
        for r in (0.01, 0.1, 0.3):
            assert theorem_m(0.1, 0.5, 0.05, r, math.pi, 1.0, 1.0) * r == pytest.approx(m * 0.1, rel=1e-12)
        with pytest.raises(PreconditionError):
            theorem_m(0.1, 0.5, 0.0, 0.1, math.pi, 1.0, 1.0)

    def test_C4_hand(self, f_sat):
        land = const_land(e=1.0, r=0.1)
        cbar = 0.8
        first = min(1.0, 0.5 / (2 ** 1.5))
        second = min(cbar / 4, 1 / math.sqrt(2))
        expect = first * second / (32 * math.pi ** 2 * (math.pi + 1))
        assert constant_C4(land, f_sat, cbar=cbar) == pytest.approx(expect, rel=1e-12)

    def test_C4_saturates_in_cbar(self, f_sat):
        land = const_land(e=1.0, r=0.1)
        vals = [constant_C4(land, f_sat, cbar=c) for c in np.linspace(0.1, 5, 30)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] == vals[-2]

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.05, 2), st.floats(0.2, 2), st.floats(0.2, 2), st.sampled_from(KINDS), st.floats(0.01, 3))
    def test_C4_ceiling(self, e, a, sigma, kind, cbar):
        f = ColonizationFunction(kind)
        land = const_land(e=e, a=a, sigma=sigma, r=0.1)
        assume(f.L_f * land.rho_max / e > 0.5)
        assert constant_C4(land, f, cbar=cbar) <= 1 / (8 * math.sqrt(2))


class TestChecklists:
    def test_ring_all_pass(self, ring_land, f_sat):
        spec = ring_spec()
        ub = check_ub_hypotheses(ring_land, f_sat, spec, 5000)
        lb = check_lb_hypotheses(ring_land, f_sat, spec)
        assert ub.all_pass and lb.all_pass and ub.branch == "viable"
        assert all(it.margin > 0 for it in ub.items + lb.items if not it.name.endswith(":local"))

    def test_ub_forced_violation(self, f_sat):
        land = varying_land(r=0.2)
        spec = BoundSpec((0.5, 0.5), 0.2, 0.9, 0.6, 1.05, 1.1)
        cl = check_ub_hypotheses(land, f_sat, spec, 100_000)
        assert "UB:ineq1" in cl.failed()
        assert cl["n>2N(Omega,r/3)"].passed

    def test_nowhere_viable_branch(self):
        f = ColonizationFunction("linear")
        land = const_land(e=math.pi / 0.4, r=0.1)
        cl = check_ub_hypotheses(land, f, BoundSpec((0.5, 0.5), 0.2, 0.9, 0.6, 1.05, 1.1), 100)
        assert cl.branch == "nowhere-viable"
        assert cl["viability:L_f*rho_max/e_min>1/2"].lhs == pytest.approx(0.4)

    def test_shrinking_t_flags_local_line(self, ring_land, f_sat):
        assert check_lb_hypotheses(ring_land, f_sat, ring_spec(beta_prime=1.08)).all_pass
        cl = check_lb_hypotheses(ring_land, f_sat, ring_spec(beta_prime=1.08, t=0.4))
        assert cl.failed() == ["localLB:ineq2"]
        it = cl["localLB:ineq2"]
        assert it.lhs == pytest.approx(0.0025 / 0.4) and it.rhs == pytest.approx(0.01 * 0.07 / (6 * 0.02), rel=1e-9)

    def test_local_margins_tighten_as_beta_prime_drops(self, ring_land, f_sat):
        for name in ("localLB:ineq1", "localLB:ineq2"):
            margins = [check_lb_hypotheses(ring_land, f_sat, ring_spec(beta_prime=bp))[name].margin
                       for bp in (1.225, 1.15, 1.1, 1.05, 1.02)]
            assert all(a > b for a, b in zip(margins, margins[1:]))

    def test_local_recipe_makes_L1_tight(self, ring_land, f_sat):
        it = check_lb_hypotheses(ring_land, f_sat, ring_spec())["L1:local"]
        assert it.passed and abs(it.margin) <= 1e-9 * abs(it.rhs)

    def test_spec_parameters_checked(self, ring_land, f_sat):
        cl = check_lb_hypotheses(ring_land, f_sat, ring_spec(m=1e6))
        assert "L0:spec" in cl.failed()


class TestProbability:
    def test_ub_hand(self, ring_land, f_sat):
        spec = ring_spec()
        n = 5000
        pb = ub_probability_bound(ring_land, f_sat, spec, n)
        C2 = 1 / (3 * 1.0 * 1.0 * 2.0)
        M = (n - 1) * 0.0025 / 1.0
        first = 2 * n * math.exp(-C2 * M * 0.01 ** 2 * 0.45 ** 2 / (16 * 0.01 ** 2))
        expo = n * 2 * 0.0025 / 3
        second = n / 2 * math.exp(-expo)
        assert pb.terms["exponent"] == pytest.approx(expo, rel=1e-12)
        assert pb.value == pytest.approx(1 - first - second, rel=1e-12)
        assert pb.alt_value == pytest.approx(1 - first - pb.terms["covering"] * math.exp(-expo), rel=1e-12)

    def test_ub_limits_and_monotone(self, ring_land, f_sat):
        vals = [ub_probability_bound(ring_land, f_sat, ring_spec(), n).value for n in (10 ** 6, 10 ** 7, 10 ** 8)]
        assert vals[0] < vals[1] < vals[2] and vals[2] > 0.99
        a = [ub_probability_bound(ring_land, f_sat, ring_spec(alpha1=a1), 10 ** 7).value for a1 in (0.55, 0.7, 0.9)]
        assert a[0] > a[1] > a[2]
        assert ub_probability_bound(ring_land, f_sat, ring_spec(), 5000).vacuous

    def test_ub_nowhere_viable_formula(self):
        f = ColonizationFunction("linear")
        land = const_land(dim=1, e=10.0, r=0.05, kind="torus")
        spec = BoundSpec((0.5,), 0.2, 0.9, 0.6, 1.05, 1.1)
        n = 20000
        pb = ub_probability_bound(land, f, spec, n)
        rho = 2.0
        first = 2 * n * math.exp(-1 / (3 * 2.0) * (n - 1) * 0.05 * (rho / 2) ** 2)
        assert pb.terms["branch"] == "nowhere-viable"
        assert pb.terms["first"] == pytest.approx(first, rel=1e-12)

    def test_lb_hand_and_monotone(self, ring_land, f_sat):
        spec = ring_spec()
        dv = derive(ring_land, f_sat, spec)
        n = 10 ** 9
        pb = lb_probability_bound(ring_land, f_sat, spec, n)
        M = (n - 1) * 0.0025
        expo = 1 / 6 * M * dv.C4 ** 2 * 0.01 ** 2 * dv.eta_theta ** 4 * 0.01 ** 2 / 0.01 ** 2
        assert pb.value == pytest.approx(1 - 2 * n * math.exp(-expo), rel=1e-12)
        b = [lb_probability_bound(ring_land, f_sat, ring_spec(beta=x), 10 ** 11).value for x in (1.01, 1.05, 1.1)]
        assert b[0] < b[1] < b[2]
        # the exponent is linear in n - 1; step n so that it reaches 40, 60, 80
        rate = pb.terms["exponent"] / (n - 1)
        big = [lb_probability_bound(ring_land, f_sat, spec, int(x / rate) + 1).value for x in (40, 60, 80)]
        assert big[0] < big[1] < big[2] <= 1 and big[2] > 0.99

    def test_lb_not_applicable(self, f_sat):
        land = const_land(e=5.0, r=0.2)
        with pytest.raises(NotApplicable):
            lb_probability_bound(land, f_sat, BoundSpec((0.5, 0.5), 0.2, 0.8, 0.7, 1.1, 1.2), 100)


class TestTwoSided:
    def test_accuracy_formula(self):
        assert two_sided_accuracy(0.8, 0.8) == 0.0
        assert two_sided_accuracy(0.55, 1.225) == pytest.approx(0.675 / 0.55)

    def test_ring_reference(self, ring_land, f_sat):
        ts = two_sided_bound(ring_land, f_sat, ring_spec(), 5000)
        dv = derive(ring_land, f_sat, ring_spec())
        assert ts.inner.radius == pytest.approx(0.49 - 1 / dv.m)
        inner = min(dv.C4 ** 2 * dv.eta_theta ** 4 * 0.01 ** 2, 0.45 ** 2 / 16)
        first = 4 * 5000 * math.exp(-1 / 6 * 4999 * 0.0025 * inner)
        assert ts.probability.terms["first"] == pytest.approx(first, rel=1e-12)
        assert ts.probability.terms["exponent"] == pytest.approx(5000 * 2 * 0.0025 / 3, rel=1e-12)

    def test_inner_shrinks_with_m(self, ring_land, f_sat):
        radii = [two_sided_bound(ring_land, f_sat, ring_spec(m=m), 5000).inner.radius for m in (100.0, 20.0, 5.0)]
        assert radii[0] > radii[1] > radii[2]

    def test_gates(self, ring_land, f_sat):
        with pytest.raises(NotApplicable):
            two_sided_bound(ring_land, f_sat, ring_spec(m=2.0), 5000)
        with pytest.raises(PreconditionError):
            two_sided_bound(ring_land, f_sat, ring_spec(alpha2=0.52), 5000)

    def test_sandwich_consistency(self, ring_land, f_sat):
        spec = ring_spec()
        assert check_ub_hypotheses(ring_land, f_sat, spec, 5000).all_pass
        assert check_lb_hypotheses(ring_land, f_sat, spec).all_pass
        ts = two_sided_bound(ring_land, f_sat, spec, 5000)
        z = ring_land.grid(ts.inner, 0.001)
        q1 = solve_q_alpha(ring_land, f_sat, z, 1.0)
        assert np.all(lower_bound_fn(ring_land, f_sat, spec)(z) <= q1)
        assert np.all(q1 <= upper_bound_fn(ring_land, f_sat, spec)(z))


class TestSchedule:
    def test_phi_rules(self):
        assert phi_value("log", 100) == pytest.approx(math.log(100))
        assert phi_value("loglog", 100) == pytest.approx(math.log(math.log(100)))
        assert phi_value("power:0.25", 16) == pytest.approx(2.0)
        assert phi_value("2*log", 100) == pytest.approx(2 * math.log(100))
        with pytest.raises(ConfigError):
            phi_value("sqrt", 10)

    def test_default_schedule(self, ring_land, f_sat):
        ns = [500, 2000, 8000, 32000]
        sch = corollary2_schedule(ring_land, f_sat, ns, 0.0, 0.0, 0.0, 0.0)
        eta = sch[0].eta
        for e in sch:
            assert e.r == pytest.approx(e.n ** -0.5)
            assert e.phi == pytest.approx(math.log(e.n))
            assert e.alpha2 == pytest.approx(1 - eta)
            assert e.beta - 1 == pytest.approx(e.beta_prime - e.beta)
            assert 1 - e.alpha1 == pytest.approx(e.beta - 1)
            assert set(e.checks) == {"cor2-1", "eta>=c1*r^gamma1", "alpha1>=alpha2", "alpha1>1/2",
                                     "beta_prime-1<=eta/2", "r^(1-2gamma1)*phi decreasing"}
        assert all(a.M < b.M for a, b in zip(sch, sch[1:]))
        assert all(a.excluded_width > b.excluded_width for a, b in zip(sch, sch[1:]))
        assert all(e.checks["r^(1-2gamma1)*phi decreasing"] for e in sch)

    def test_cor2_flag(self, ring_land, f_sat):
        sch = corollary2_schedule(ring_land, f_sat, [500, 2000], 0.0, 0.0, 0.0, 1e9)
        assert not any(e.checks["cor2-1"] for e in sch)

    def test_validation(self, ring_land, f_sat):
        with pytest.raises(ConfigError):
            corollary2_schedule(ring_land, f_sat, [500, 2000], 0.5, 0.0, 0.0, 0.0)
        with pytest.raises(ConfigError):
            corollary2_schedule(ring_land, f_sat, [2000, 500], 0.0, 0.0, 0.0, 0.0)
