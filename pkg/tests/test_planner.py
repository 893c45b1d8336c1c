import math

import numpy as np
import pytest

from illgswitch import (BasinVerdict, ConfigError, HypothesisError,
                        InfeasiblePlanError, MaterialParams, PlanCase,
                        SpinState, ThresholdError, basin_membership,
                        compute_plan, plan_switching, planned_state_check,
                        scaled_from_hats)
from illgswitch.planner import (admissible_b, build_approximation,
                                nearest_resonant_b)

D_REF = np.array([-0.1087, 0.0, 1.0])


class TestCase1Plan:
    def test_resonant_structure(self, case1):
        plan, sp = case1.plan, case1.scaled
        assert plan.case is PlanCase.CASE_II
        assert plan.n == 6
        assert abs(2.0 * sp.mu * plan.n * sp.omega_hat - 1.0) <= 1e-9

    def test_values_rebuilt_from_scalings(self, case1):
        plan, sp = case1.plan, case1.scaled
        mu, w = sp.mu, sp.omega_hat
        slow = mu * sp.eta_hat / (w * sp.alpha_hat)
        d21, d31 = 0.1087, 1.1087
        Xi = d21 * sp.eta_hat / (8.0 * sp.alpha_hat * w * w)
        K_f = d31 / (4.0 * d21)
        assert plan.T_sw == pytest.approx(slow * math.pi, rel=1e-12)
        assert plan.tau_sw == pytest.approx(math.pi / (mu * w), rel=1e-12)
        assert plan.Xi == pytest.approx(Xi, rel=1e-12)
        assert plan.K_f == pytest.approx(K_f, rel=1e-12)
        # the in-plane swing saturates the arcsin, so delta_sw = T_sw/2
        assert math.sqrt(mu * mu * w * w + K_f) - mu * w > 1.0
        assert plan.delta_sw == pytest.approx(0.5 * plan.T_sw, rel=1e-12)
        cap = mu * mu * (sp.eta_hat / sp.alpha_hat) * math.acos(1.0 - Xi)
        assert plan.delta_sw_star == pytest.approx(min(plan.delta_sw, cap),
                                                   rel=1e-12)
        assert plan.delta_sw_star < plan.delta_sw

    def test_window_uses_refined_half_width(self, case1):
        plan = case1.plan
        lo, hi = plan.window
        assert lo == pytest.approx(plan.T_sw - plan.delta_sw_star, rel=1e-12)
        assert hi == pytest.approx(plan.T_sw + plan.delta_sw_star, rel=1e-12)

    def test_plan_switching_matches_compute_plan(self, case1):
        plan, t_star = plan_switching(case1.params, case1.h_a,
                                      case1.scaled.epsilon)
        assert t_star == plan.T_sw
        assert plan == case1.plan


class TestStrongCouplingCase:
    def test_case_i_any_duration_window(self):
        sp = scaled_from_hats(D_REF, 1.0, 2.0, np.array([0.0, 0.08, 0.0]),
                              0.1)
        plan = compute_plan(sp, D_REF)
        assert sp.omega_hat == pytest.approx(0.16, rel=1e-12)
        assert plan.Xi == pytest.approx(0.1087 * 2.0 / (8.0 * 0.16 ** 2),
                                        rel=1e-12)
        assert plan.Xi > 1.0
        assert plan.case is PlanCase.CASE_I
        assert plan.n is None and plan.delta_sw_star is None
        lo, hi = plan.window
        assert lo == pytest.approx(0.5 * plan.T_sw, rel=1e-12)
        assert hi == pytest.approx(1.5 * plan.T_sw, rel=1e-12)

    def test_unsaturated_window_tracks_transverse_gap(self):
        # With a small D_{3,1}/D_{2,1} ratio the arcsin argument stays
        # below 1 and the window width genuinely depends on K_f.
        h = np.array([0.0, 0.08, 0.0])
        base = compute_plan(scaled_from_hats(
            np.array([0.0, 0.5, 1.0]), 1.0, 2.0, h, 0.1),
            np.array([0.0, 0.5, 1.0]))
        taller = compute_plan(scaled_from_hats(
            np.array([0.0, 0.5, 2.0]), 1.0, 2.0, h, 0.1),
            np.array([0.0, 0.5, 2.0]))
        assert base.K_f == pytest.approx(0.5, rel=1e-12)
        assert taller.K_f == pytest.approx(1.0, rel=1e-12)
        assert base.delta_sw < 0.5 * base.T_sw
        assert abs(taller.delta_sw - base.delta_sw) > 0.2 * base.delta_sw


class TestInfeasibleAndGates:
    def test_detuned_weak_coupling_is_infeasible(self):
        sp = scaled_from_hats(D_REF, 1.0, 2.0, np.array([0.0, 0.675, 0.0]),
                              0.05)
        plan = compute_plan(sp, D_REF)
        assert plan.Xi < 1.0
        assert plan.case is PlanCase.INFEASIBLE
        assert plan.window is None
        with pytest.raises(InfeasiblePlanError):
            plan_switching(sp.material(D_REF), sp.physical_h_a, sp.epsilon)

    def test_mu_gate(self):
        p = MaterialParams(D_REF, 0.36, 0.72)
        with pytest.raises(ThresholdError) as exc:
            plan_switching(p, np.array([0.0, 5.0, 0.0]), 0.6)
        assert exc.value.mu == pytest.approx(0.6, rel=1e-12)

    def test_non_simple_frame_rejected(self):
        sp = scaled_from_hats(D_REF, 1.0, 2.0, np.array([0.0, 0.5, 0.5]),
                              0.05)
        with pytest.raises(HypothesisError):
            compute_plan(sp, D_REF)

    def test_bundle_type_checked(self):
        with pytest.raises(ConfigError):
            compute_plan("not scaled params", D_REF)

    def test_build_approximation_uses_stricter_gate(self):
        # mu0 for the general forms is tighter than mu0_tilde; a mu in
        # between passes compute_plan but fails build_approximation.
        sp = scaled_from_hats(D_REF, 1.0, 2.0, np.array([0.0, 0.5, 0.0]),
                              0.7)
        compute_plan(sp, D_REF)
        with pytest.raises(ThresholdError):
            build_approximation(sp.material(D_REF), sp.physical_h_a, 0.7)

    def test_build_approximation_happy_path(self, case2):
        sp = case2.scaled
        bundle = build_approximation(case2.params, case2.h_a, sp.epsilon)
        assert bundle.scaled.mu == pytest.approx(sp.mu, rel=1e-14)
        assert bundle.approx.simple
        assert bundle.scaled.mu <= bundle.thresholds.mu0


class TestAdmissibleFields:
    def test_case1_ladder(self, case1):
        sp = case1.scaled
        rungs = admissible_b(sp.mu, sp.alpha_hat, sp.eta_hat, D_REF, 200)
        assert [n for n, _, _ in rungs] == list(range(1, 105))
        n6 = rungs[5]
        assert n6[0] == 6
        assert n6[1] == pytest.approx(
            math.sqrt(sp.alpha_hat) / (2.0 * sp.mu * sp.eta_hat * 6.0),
            rel=1e-13)
        xi = [x for _, _, x in rungs]
        assert all(b < a for a, b in zip(xi[1:], xi))  # Xi grows with n
        assert xi[-1] < 1.0
        xi_105 = 0.1087 * sp.eta_hat * sp.mu ** 2 * 105 ** 2 / (
            2.0 * sp.alpha_hat)
        assert xi_105 >= 1.0

    def test_empty_ladder(self, case1):
        sp = case1.scaled
        assert admissible_b(sp.mu, sp.alpha_hat, sp.eta_hat, D_REF, 0) == []
        with pytest.raises(ConfigError):
            admissible_b(sp.mu, sp.alpha_hat, sp.eta_hat, D_REF, -3)

    def test_nearest_resonant_snap(self, case1):
        sp = case1.scaled
        args = (sp.mu, sp.alpha_hat, sp.eta_hat)
        b6 = math.sqrt(sp.alpha_hat) / (2.0 * sp.mu * sp.eta_hat * 6.0)
        n, b = nearest_resonant_b(b6, *args)
        assert n == 6 and b == pytest.approx(b6, rel=1e-15)
        n, b = nearest_resonant_b(b6 * 0.96, *args)  # still closest to n=6
        assert n == 6
        n, _ = nearest_resonant_b(1e6, *args)  # huge request caps at n=1
        assert n == 1
        with pytest.raises(ConfigError):
            nearest_resonant_b(0.0, *args)


class TestBasinMembership:
    def test_equilibria(self, case2):
        p = case2.params
        down = SpinState(np.array([-1.0, 0.0, 0.0]), np.zeros(3))
        up = SpinState(np.array([1.0, 0.0, 0.0]), np.zeros(3))
        assert basin_membership(down, p) is BasinVerdict.IN_MINUS_BASIN
        assert basin_membership(up, p) is BasinVerdict.IN_PLUS_BASIN

    def test_hard_axis_saddle_is_outside(self, case2):
        # h(e2) = D_{2,1}/2 exceeds the D_{2,1}/3 sublevel bound.
        z = SpinState(np.array([0.0, 1.0, 0.0]), np.zeros(3))
        assert basin_membership(z, case2.params) is BasinVerdict.OUTSIDE

    def test_kinetic_budget_counts(self, case2):
        p = case2.params
        d21 = 0.1087
        speed = math.sqrt(d21 / (2.0 * p.eta))  # eta |v|^2 / 2 = d21 / 4
        z = SpinState(np.array([-1.0, 0.0, 0.0]),
                      np.array([0.0, speed, 0.0]))
        assert basin_membership(z, p) is BasinVerdict.IN_MINUS_BASIN
        z_fast = SpinState(np.array([-1.0, 0.0, 0.0]),
                           np.array([0.0, 2.0 * speed, 0.0]))
        assert basin_membership(z_fast, p) is BasinVerdict.OUTSIDE

    def test_array_input_accepted(self, case2):
        z = np.array([-1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        assert basin_membership(z, case2.params) is BasinVerdict.IN_MINUS_BASIN


class TestPlannedStateCheck:
    def test_planned_instant_meets_margin(self, case1):
        check = planned_state_check(case1.scaled, D_REF, case1.plan.T_sw)
        assert check.in_window and check.margin_met
        assert check.bound == pytest.approx(0.1087 / 4.0, rel=1e-12)
        assert check.W_hat < 0.1 * check.bound
        assert check.tau_star == pytest.approx(case1.plan.tau_sw, rel=1e-12)

    def test_late_switch_off_flagged(self, case1):
        check = planned_state_check(case1.scaled, D_REF,
                                    1.6 * case1.plan.T_sw)
        assert not check.in_window

    def test_inside_coarse_window(self, case1):
        plan = case1.plan
        check = planned_state_check(case1.scaled, D_REF,
                                    plan.T_sw + 0.4 * plan.delta_sw)
        assert check.in_window


class TestGaugeInvariance:
    def test_plan_is_gauge_free(self, case1):
        p, h_a = case1.params, case1.h_a
        eps = case1.scaled.epsilon
        base, t_base = plan_switching(p, h_a, eps)
        for c in (2.0, 0.3):
            other, t_other = plan_switching(p, h_a, eps * c)
            assert other.case is base.case and other.n == base.n
            assert t_other == pytest.approx(t_base, rel=1e-10)
            for attr in ("T_sw", "delta_sw", "delta_sw_star", "Xi", "K_f",
                         "tau_sw"):
                assert getattr(other, attr) == pytest.approx(
                    getattr(base, attr), rel=1e-10), attr
