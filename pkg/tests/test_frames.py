import math

import numpy as np
import pytest

from illgswitch import (ConfigError, HypothesisError, MaterialParams,
                        PoleProximityError, build_C, build_E_explicit,
                        build_scaled, from_spherical, gamma_matrix,
                        initial_orientation, lambda_matrix, scaled_from_hats,
                        to_spherical, unitary_diagonalization_report)
from illgswitch.frames import SphericalPoint, TimeMaps, angles_to_chi_xi, \
    chi_xi_to_angles

D_REF = np.array([-0.1087, 0.0, 1.0])


def _random_field(rng):
    while True:
        h = rng.uniform(-1.0, 1.0, size=3)
        if math.hypot(h[1], h[2]) > 1e-2 and np.linalg.norm(h) > 0.1:
            return h


class TestRotationFrame:
    def test_rotation_structure(self, rng):
        for _ in range(200):
            h = _random_field(rng)
            C = build_C(h)
            omega = np.linalg.norm(h)
            assert np.allclose(C.T @ C, np.eye(3), atol=1e-13)
            assert np.linalg.det(C) == pytest.approx(1.0, abs=1e-13)
            got = C.T @ gamma_matrix(h) @ C
            assert np.allclose(got, lambda_matrix(omega), atol=1e-13)

    def test_field_maps_to_axis(self, rng):
        # The rotation takes the third frame axis to the field direction.
        for _ in range(50):
            h = _random_field(rng)
            C = build_C(h)
            assert np.allclose(C @ np.array([0.0, 0.0, 1.0]),
                               h / np.linalg.norm(h), atol=1e-13)

    def test_axis_aligned_field_rejected(self):
        with pytest.raises(HypothesisError):
            build_C(np.array([1.0, 0.0, 0.0]))

    def test_zero_field_rejected(self):
        with pytest.raises(HypothesisError):
            build_C(np.zeros(3))


class TestAnisotropyInFrame:
    def test_explicit_matches_conjugation(self, rng):
        for _ in range(200):
            h = _random_field(rng)
            D = np.sort(rng.uniform(-1.0, 1.0, size=3))
            E = build_E_explicit(h, D)
            want = build_C(h).T @ np.diag(D) @ build_C(h)
            assert np.allclose(E, want, atol=1e-13)
            assert np.allclose(E, E.T, atol=1e-15)

    def test_trace_preserved(self, rng):
        h = _random_field(rng)
        E = build_E_explicit(h, D_REF)
        assert np.trace(E) == pytest.approx(np.sum(D_REF), abs=1e-13)


class TestUnitaryReport:
    def test_identities_hold(self, rng):
        for _ in range(100):
            rep = unitary_diagonalization_report(_random_field(rng))
            assert rep["unitary"] < 1e-13
            assert rep["diagonalization"] < 1e-13
            assert rep["product"] < 1e-13


class TestScaledParams:
    def test_case_study_values(self, case2):
        sp = case2.scaled
        assert sp.mu == pytest.approx(0.1, rel=1e-12)
        assert sp.omega_hat == pytest.approx(1.0, rel=1e-12)
        assert sp.alpha_hat == pytest.approx(1.0, rel=1e-12)
        assert sp.eta_hat == pytest.approx(2.0, rel=1e-12)
        assert sp.omega == pytest.approx(0.5, rel=1e-12)
        assert sp.is_simple

    def test_physical_round_trip(self):
        p = MaterialParams(D_REF, 0.01, 0.02)
        h_a = np.array([0.0, 5.0, 0.0])
        sp = build_scaled(p, h_a, 0.1)
        assert sp.physical_alpha == pytest.approx(0.01, rel=1e-14)
        assert sp.physical_eta == pytest.approx(0.02, rel=1e-14)
        assert np.allclose(sp.physical_h_a, h_a, rtol=1e-14)
        p2 = sp.material(D_REF)
        assert p2.alpha == pytest.approx(p.alpha, rel=1e-14)

    def test_gauge_invariance(self):
        # Rescaling epsilon while holding the physical parameters fixed
        # leaves every reduced observable unchanged.
        p = MaterialParams(D_REF, 0.01, 0.02)
        h_a = np.array([0.3, 5.0, -1.0])
        base = build_scaled(p, h_a, 0.1)
        for c in (2.0, 0.5, 7.3):
            other = build_scaled(p, h_a, 0.1 / c)
            assert other.mu == pytest.approx(base.mu, rel=1e-10)
            assert other.omega_hat == pytest.approx(base.omega_hat,
                                                    rel=1e-10)
            assert np.allclose(other.E_hat, base.E_hat, rtol=1e-10,
                               atol=1e-12)
            assert other.physical_alpha == pytest.approx(0.01, rel=1e-10)

    def test_simple_frame_detection(self):
        def sp_for(h_hat):
            return scaled_from_hats(D_REF, 1.0, 2.0, np.array(h_hat), 0.05)

        assert sp_for([0.0, 0.7, 0.0]).is_simple
        assert sp_for([0.0, 0.0, 0.9]).is_simple
        assert not sp_for([0.0, 0.5, 0.5]).is_simple
        assert not sp_for([0.3, 0.5, 0.0]).is_simple
        with pytest.raises(HypothesisError):
            sp_for([0.3, 0.5, 0.0]).require_simple()

    def test_e_hat_indexing(self):
        sp = scaled_from_hats(D_REF, 1.0, 2.0, np.array([0.1, 0.7, -0.2]),
                              0.05)
        assert sp.e_hat(1, 2) == pytest.approx(sp.E_hat[0, 1])
        assert sp.e_hat(3, 3) == pytest.approx(sp.E_hat[2, 2])

    def test_epsilon_validation(self):
        p = MaterialParams(D_REF, 0.01, 0.02)
        with pytest.raises(ConfigError):
            build_scaled(p, np.array([0.0, 5.0, 0.0]), 0.0)


class TestSphericalChart:
    def test_round_trip(self, rng):
        for _ in range(100):
            x = rng.normal(size=3)
            x /= np.linalg.norm(x)
            if abs(x[2]) > 0.999:
                continue
            sp = to_spherical(x)
            assert np.allclose(from_spherical(sp), x, atol=1e-14)

    def test_pole_rejected(self):
        with pytest.raises(PoleProximityError):
            to_spherical(np.array([0.0, 0.0, 1.0]))
        with pytest.raises(PoleProximityError):
            to_spherical(np.array([0.0, 0.0, -1.0]))

    def test_initial_orientation_reference(self, case2):
        sp = initial_orientation(case2.scaled, np.array([1.0, 0.0, 0.0]))
        assert sp.theta == pytest.approx(0.5 * math.pi, abs=1e-14)
        assert sp.phi == pytest.approx(0.0, abs=1e-14)

    def test_initial_orientation_tilted_field(self):
        # The reversal start sits at theta(0) = pi/2 - asin(h1/omega),
        # because the first row of C is (sigma, 0, h1)/omega.
        h_hat = np.array([0.3, 0.8, -0.2])
        omega = np.linalg.norm(h_hat)
        spp = scaled_from_hats(D_REF, 1.0, 2.0, h_hat, 0.05)
        point = initial_orientation(spp, np.array([1.0, 0.0, 0.0]))
        assert point.theta == pytest.approx(
            0.5 * math.pi - math.asin(h_hat[0] / omega), abs=1e-13)
        assert point.phi == pytest.approx(0.0, abs=1e-13)
        m_back = spp.C @ from_spherical(point)
        assert np.allclose(m_back, [1.0, 0.0, 0.0], atol=1e-13)

    def test_chart_of_tilted_axis_vector(self):
        # Inverting the chart on omega^-1 (sigma, 0, -h1) lands at
        # theta = pi/2 + asin(h1/omega), phi = 0.
        h1, h2, h3 = 0.4, 0.7, 0.0
        sigma = math.hypot(h2, h3)
        omega = math.sqrt(h1 * h1 + sigma * sigma)
        pt = to_spherical(np.array([sigma, 0.0, -h1]) / omega)
        assert pt.theta == pytest.approx(
            0.5 * math.pi + math.asin(h1 / omega), abs=1e-13)
        assert pt.phi == pytest.approx(0.0, abs=1e-13)

    def test_chi_xi_round_trip(self):
        pt = SphericalPoint(theta=1.8, phi=0.4)
        chi, xi = angles_to_chi_xi(pt, tau=3.0, mu=0.05, omega_hat=1.2)
        back = chi_xi_to_angles(chi, xi, tau=3.0, mu=0.05, omega_hat=1.2)
        assert back.theta == pytest.approx(pt.theta, abs=1e-14)
        assert back.phi == pytest.approx(pt.phi, abs=1e-14)


class TestTimeMaps:
    def test_round_trip(self, case1):
        tm = case1.scaled.time_maps()
        taus = np.linspace(0.0, 50.0, 11)
        assert np.allclose(tm.tau_of_t(tm.t_of_tau(taus)), taus, rtol=1e-14)

    def test_case_study_pulse_lengths(self, case1, case2):
        tm2 = case2.scaled.time_maps()
        assert tm2.t_of_tau(10.0 * math.pi) == pytest.approx(0.6283185307,
                                                             rel=1e-9)
        tm1 = case1.scaled.time_maps()
        tau_sw = math.pi / (case1.scaled.mu * case1.scaled.omega_hat)
        assert tm1.t_of_tau(tau_sw) == pytest.approx(case1.plan.T_sw,
                                                     rel=1e-12)
        assert tm1.t_of_tau(tau_sw) == pytest.approx(0.0635, rel=5e-3)

    def test_rate_is_eta(self, case2):
        # dt/dtau equals the physical inertia time scale eta.
        tm = case2.scaled.time_maps()
        assert tm.rate == pytest.approx(case2.params.eta, rel=1e-12)

    def test_inconsistent_scales_rejected(self):
        with pytest.raises(ConfigError):
            TimeMaps(epsilon=0.1, alpha_hat=1.0, eta_hat=2.0, mu=0.3)
