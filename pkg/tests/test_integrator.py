"""Tests for the numerical integrator, energy audit, and sweep driver.

The compiled stepper is cross-checked against scipy's DOP853 on both a
driven window and a free ringdown, then the run policies (immediate
classification, budgets, the norm guard, dissipation audits, parallel
sweeps) are exercised on the bundled configurations.
"""

import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from illgswitch import (
    ConfigError,
    FieldSchedule,
    IntegrationError,
    IntegratorConfig,
    MaterialParams,
    SpinState,
    SwitchOutcome,
    energy_audit,
    illg_rhs,
    integrate,
    sweep,
)

D_REF = np.array([-0.1087, 0.0, 1.0])
E1 = np.array([1.0, 0.0, 0.0])
REST = SpinState(E1, np.zeros(3))


@pytest.fixture(scope="module")
def case2_run(case2):
    """One tight-tolerance case-2 run over the full bundled horizon."""
    return integrate(REST, case2.schedule, case2.params, case2.integrator)


class TestAgainstScipy:
    def test_kernel_matches_dop853_across_the_switch(self, case2):
        """Driven window plus free ringdown against an independent solver."""
        p = case2.params
        t_star = case2.schedule.t_star
        cfg = IntegratorConfig(t_end=2.0 * t_star)
        traj = integrate(REST, case2.schedule, p, cfg)

        on = traj.t <= t_star
        h_on = case2.h_a

        def run_ref(field, t0, t1, y0, t_eval):
            sol = solve_ivp(
                lambda t, y: np.concatenate(illg_rhs(y, field, p)),
                (t0, t1), y0, method="DOP853",
                rtol=1e-11, atol=1e-13, t_eval=t_eval, dense_output=False,
            )
            assert sol.success
            return sol

        sol1 = run_ref(h_on, 0.0, t_star, REST.as_array(), traj.t[on])
        y_mid = run_ref(h_on, 0.0, t_star, REST.as_array(),
                        np.array([t_star])).y[:, -1]
        sol2 = run_ref(np.zeros(3), t_star, cfg.t_end, y_mid, traj.t[~on])

        ref = np.vstack([sol1.y.T, sol2.y.T])
        diff = np.max(np.abs(traj.y - ref))
        assert diff <= 1e-8

    def test_field_flag_marks_the_driven_samples(self, case2):
        cfg = IntegratorConfig(t_end=2.0 * case2.schedule.t_star)
        traj = integrate(REST, case2.schedule, case2.params, cfg)
        t_star = case2.schedule.t_star
        # The boundary sample belongs to the driven stretch.
        assert np.array_equal(traj.field_on, traj.t <= t_star)
        assert traj.t[0] == 0.0
        assert traj.t[-1] == pytest.approx(cfg.t_end, rel=1e-12)
        assert np.all(np.diff(traj.t) > 0.0)


class TestOutcomePolicies:
    def test_rest_at_plus_e1_with_no_field_is_not_switched(self, case2):
        traj = integrate(REST, FieldSchedule(case2.h_a, t_star=0.0),
                         case2.params, IntegratorConfig(t_end=5.0))
        assert traj.outcome is SwitchOutcome.NOT_SWITCHED
        assert len(traj.t) == 1 and traj.t[0] == 0.0
        assert traj.n_accepted == 0
        assert not traj.field_on[0]

    def test_rest_at_minus_e1_is_switched(self, case2):
        z0 = SpinState(-E1, np.zeros(3))
        traj = integrate(z0, FieldSchedule(np.zeros(3), t_star=0.0),
                         case2.params, IntegratorConfig(t_end=5.0))
        assert traj.outcome is SwitchOutcome.SWITCHED

    def test_rest_at_a_transverse_equilibrium_is_other(self, case2):
        z0 = SpinState(np.array([0.0, 0.0, 1.0]), np.zeros(3))
        traj = integrate(z0, FieldSchedule(np.zeros(3), t_star=0.0),
                         case2.params, IntegratorConfig(t_end=5.0))
        assert traj.outcome is SwitchOutcome.OTHER

    def test_pulse_of_planned_duration_switches(self, case2):
        cfg = IntegratorConfig(t_end=20000.0, rel_tol=1e-8, abs_tol=1e-10,
                               convergence_tol=1e-4)
        traj = integrate(REST, case2.schedule, case2.params, cfg)
        assert traj.outcome is SwitchOutcome.SWITCHED
        final = traj.final_state()
        assert isinstance(final, SpinState)
        assert np.linalg.norm(final.m + E1) < 1e-3
        assert np.linalg.norm(final.v) < 1e-3

    def test_horizon_exhaustion_is_undecided(self, case2):
        # The whole run is driven, so no classification can happen.
        cfg = IntegratorConfig(t_end=0.5 * case2.schedule.t_star)
        traj = integrate(REST, case2.schedule, case2.params, cfg)
        assert traj.outcome is SwitchOutcome.UNDECIDED
        assert traj.field_on.all()

    def test_step_budget_exhaustion_is_undecided(self, case2):
        cfg = IntegratorConfig(t_end=case2.integrator.t_end,
                               max_wall_steps=64)
        traj = integrate(REST, case2.schedule, case2.params, cfg)
        assert traj.outcome is SwitchOutcome.UNDECIDED
        assert traj.t[-1] < cfg.t_end
        assert traj.n_accepted + traj.n_rejected <= 64

    def test_type_checks(self, case2):
        with pytest.raises(ConfigError):
            integrate(REST.as_array(), case2.schedule, case2.params,
                      IntegratorConfig(t_end=1.0))
        with pytest.raises(ConfigError):
            integrate(REST, case2.h_a, case2.params,
                      IntegratorConfig(t_end=1.0))


class TestEnergyAndConstraints:
    def test_energy_decays_after_switch_off(self, case2, case2_run):
        traj = case2_run
        free = ~traj.field_on
        assert free.sum() > 100
        # Strict decay of W on the free stretch, up to solver noise.
        assert traj.max_energy_increase < 1e-11
        w_free = traj.W[free]
        assert w_free[-1] < w_free[0]

    def test_constraint_drifts_are_tiny(self, case2_run):
        assert case2_run.norm_drift < 1e-9
        assert case2_run.mv_drift < 1e-8
        radii = np.linalg.norm(case2_run.m, axis=1)
        assert np.max(np.abs(radii - 1.0)) < 1e-12

    def test_alpha_to_zero_conserves_energy(self):
        p = MaterialParams(D_REF, alpha=1e-300, eta=0.02)
        traj = integrate(REST, FieldSchedule(np.array([0.0, 5.0, 0.0])),
                         p, IntegratorConfig(t_end=1.0))
        assert np.max(np.abs(traj.W - traj.W[0])) <= 1e-6

    def test_step_size_tracks_the_nutation_period(self):
        h = np.array([0.0, 5.0, 0.0])
        medians = []
        for eta in (0.02, 0.002):
            p = MaterialParams(D_REF, alpha=0.01, eta=eta)
            traj = integrate(REST, FieldSchedule(h), p,
                             IntegratorConfig(t_end=0.3))
            medians.append(np.median(np.diff(traj.t)))
        ratio = medians[0] / medians[1]
        assert 5.0 <= ratio <= 20.0

    def test_tolerance_halving_leaves_the_final_state(self, case2):
        finals = []
        for scale in (1.0, 0.5):
            cfg = IntegratorConfig(t_end=3.0, rel_tol=scale * 1e-8,
                                   abs_tol=scale * 1e-10)
            traj = integrate(REST, case2.schedule, case2.params, cfg)
            finals.append(traj.y[-1])
        assert np.max(np.abs(finals[0] - finals[1])) < 1e-6

    def test_norm_guard_trips_without_renormalization(self, case2):
        cfg = IntegratorConfig(t_end=50.0, rel_tol=1e-3, abs_tol=1e-3,
                               renormalize=False)
        with pytest.raises(IntegrationError) as err:
            integrate(REST, case2.schedule, case2.params, cfg)
        assert err.value.last_t > 0.0
        assert err.value.last_state.shape == (6,)
        assert np.all(np.isfinite(err.value.last_state))

    def test_renormalization_rescues_loose_tolerances(self, case2):
        cfg = IntegratorConfig(t_end=50.0, rel_tol=1e-3, abs_tol=1e-3,
                               renormalize=True)
        traj = integrate(REST, case2.schedule, case2.params, cfg)
        radii = np.linalg.norm(traj.m, axis=1)
        assert np.max(np.abs(radii - 1.0)) < 1e-12


class TestEnergyAudit:
    def test_dissipation_law_holds_on_a_dense_run(self, case2, case2_run):
        audit = energy_audit(case2_run, case2.params)
        assert not audit.sparse
        assert audit.n_points > 100
        assert audit.max_rel_residual < 1e-4

    def test_sparse_sampling_is_flagged(self, case2, case2_run):
        dt = np.median(np.diff(case2_run.t))
        nutation_dt = 2.0 * math.pi * case2.params.eta / 10.0
        stride = int(math.ceil(2.0 * nutation_dt / dt))
        thin = dataclasses.replace(
            case2_run,
            t=case2_run.t[::stride], y=case2_run.y[::stride],
            W=case2_run.W[::stride], field_on=case2_run.field_on[::stride],
        )
        audit = energy_audit(thin, case2.params)
        assert audit.sparse

    def test_too_short_for_an_audit(self, case2, case2_run):
        stub = dataclasses.replace(
            case2_run,
            t=case2_run.t[:4], y=case2_run.y[:4],
            W=case2_run.W[:4], field_on=case2_run.field_on[:4],
        )
        with pytest.raises(ConfigError):
            energy_audit(stub, case2.params)


class TestSweep:
    def test_empty_grid(self, case2):
        out = sweep(REST, case2.h_a, case2.params, case2.integrator, [])
        assert out == []

    def test_sweep_matches_single_runs(self, case2):
        cfg = IntegratorConfig(t_end=3.0, rel_tol=1e-8, abs_tol=1e-10)
        t_sw = case2.plan.T_sw
        points = sweep(REST, case2.h_a, case2.params, cfg, [0.0, t_sw])
        assert [pt.t_star for pt in points] == [0.0, t_sw]
        assert points[0].outcome is SwitchOutcome.NOT_SWITCHED
        solo = integrate(REST, FieldSchedule(case2.h_a, t_sw),
                         case2.params, cfg)
        assert np.array_equal(points[1].final_state, solo.y[-1])
        assert points[1].final_W == pytest.approx(solo.W[-1], rel=1e-12)

    def test_band_around_the_planned_pulse(self, case2):
        plan = case2.plan
        assert plan.delta_sw_star is not None
        offsets = np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        grid = plan.T_sw + offsets * plan.delta_sw_star
        cfg = IntegratorConfig(t_end=20000.0, rel_tol=1e-8, abs_tol=1e-10,
                               convergence_tol=1e-4)
        points = sweep(REST, case2.h_a, case2.params, cfg, grid)
        flags = [pt.outcome is SwitchOutcome.SWITCHED for pt in points]
        # Everything inside the guaranteed window must switch, and the
        # switched set must be a single contiguous band.
        inner = np.abs(offsets) <= 1.0
        assert all(np.asarray(flags)[inner])
        hits = [i for i, f in enumerate(flags) if f]
        assert hits == list(range(hits[0], hits[-1] + 1))
        assert all(pt.outcome is not SwitchOutcome.UNDECIDED
                   for pt in points)


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        dict(t_end=0.0),
        dict(t_end=-1.0),
        dict(t_end=1.0, rel_tol=0.0),
        dict(t_end=1.0, abs_tol=-1e-9),
        dict(t_end=1.0, convergence_tol=0.0),
        dict(t_end=1.0, max_step=0.0),
        dict(t_end=1.0, max_wall_steps=0),
    ])
    def test_bad_configs_are_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            IntegratorConfig(**kwargs)
