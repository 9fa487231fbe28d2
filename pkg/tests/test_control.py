import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cablelift.control import (AttitudePid, ControlGains, FollowerCommand,
                               GainSynthesisError, LeaderInput, MeasurementNoise,
                               allocate, cac, cable_signals, follower_outer_loop,
                               input_to_thrust_vector, leader_hold_gain_matrix,
                               leader_pd, pac, payload_signals, stack_gains,
                               synthesize_gains)
from cablelift.geometry import E3, exp_so3
from cablelift.linearization import controlled_subspace_eigs

from conftest import hover_state, tilted_state


def unit_gains(n):
    return ControlGains(k_eta0=np.tile(np.eye(3), (n, 1, 1)),
                        k_eta0_dot=np.tile(np.eye(3), (n, 1, 1)),
                        k_xi=np.tile(np.eye(3)[:, 0:2], (n, 1, 1)),
                        k_xi_dot=np.tile(np.eye(3)[:, 0:2], (n, 1, 1)))


@pytest.fixture(scope="module")
def rod_gains(rod_params, rod_model):
    return synthesize_gains(rod_params, rod_model)


@pytest.fixture(scope="module")
def tri_gains(tri_params, tri_model):
    return synthesize_gains(tri_params, tri_model)


class TestFeedbackLaws:
    def test_pac_zero_errors(self):
        g = unit_gains(2)
        assert np.array_equal(pac(np.zeros(3), np.zeros(3), g, 1), np.zeros(3))

    def test_pac_linear_map(self):
        g = unit_gains(2)
        assert np.allclose(pac([0.1, 0.0, 0.0], np.zeros(3), g, 1), [-0.1, 0.0, 0.0])

    def test_cac_zero_errors(self):
        g = unit_gains(2)
        assert np.array_equal(cac(np.zeros(3), np.zeros(3), g, 1), np.zeros(3))

    def test_cac_linear_map(self):
        g = unit_gains(2)
        out = cac([0.1, 0.0, 0.0], np.zeros(3), g, 1)
        assert np.allclose(out, -0.1 * g.k_xi[1][:, 0])

    def test_follower_rejects_leader_index(self, rod_eq):
        with pytest.raises(ValueError):
            follower_outer_loop(None, rod_eq, unit_gains(2), 0)

    def test_outer_loop_additivity(self, rod_params, rod_eq, rod_gains):
        st = tilted_state(rod_params, 8.0, azimuth_deg=30.0)
        st.r0 = exp_so3([0.05, -0.02, 0.01])
        st.om0 = np.array([0.1, 0.2, -0.1])
        u_d = follower_outer_loop(st, rod_eq, rod_gains, 1)
        eta0, eta0_dot = payload_signals(st)
        xi, xi_dot = cable_signals(st, 1)
        expected = rod_eq.u[1] + pac(eta0, eta0_dot, rod_gains, 1) \
            + cac(xi, xi_dot, rod_gains, 1)
        assert np.array_equal(u_d, expected)

    def test_zero_errors_passthrough(self, rod_params, rod_eq, rod_gains):
        st = hover_state(rod_params)
        assert np.allclose(follower_outer_loop(st, rod_eq, rod_gains, 1), rod_eq.u[1])


class TestAllocate:
    def test_hover_passthrough(self):
        cmd = allocate([0.0, 0.0, 0.62784], 0.052, 9.81)
        assert cmd.theta_d == 0.0 and cmd.phi_d == 0.0
        assert cmd.f == 0.62784 and not cmd.saturated

    def test_pitch_for_forward_force(self):
        m, g = 0.052, 9.81
        cmd = allocate([0.1 * m * g, 0.0, m * g], m, g)
        assert abs(cmd.theta_d - 0.1) < 1e-12

    def test_roll_sign_realizes_lateral_force(self):
        # positive u_y needs negative roll so that thrust tilts along +e2
        m, g = 0.052, 9.81
        cmd = allocate([0.0, 0.1 * m * g, m * g], m, g)
        u = input_to_thrust_vector(cmd)
        assert u[1] > 0.0
        assert abs(u[1] - 0.1 * m * g) < 5e-4

    def test_clamps_and_flags(self):
        m, g = 0.052, 9.81
        cmd = allocate([10.0 * m * g, 0.0, m * g], m, g)
        assert cmd.theta_d == 0.35 and cmd.saturated
        cmd = allocate([0.0, 0.0, -1.0], m, g)
        assert cmd.f == 0.0 and cmd.saturated

    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=3))
    def test_output_always_within_bounds(self, u):
        cmd = allocate(u, 0.052, 9.81, angle_bound=0.35)
        assert abs(cmd.theta_d) <= 0.35
        assert abs(cmd.phi_d) <= 0.35
        assert cmd.f >= 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            allocate([np.nan, 0.0, 0.0], 0.052, 9.81)


class TestAttitudePid:
    def test_zero_error_zero_moment(self):
        pid = AttitudePid(unit_gains(1))
        m = pid.update(FollowerCommand(0.0, 0.0, 0.5), 0.0, 0.0, 0.0,
                       np.zeros(3), 0.01)
        assert np.array_equal(m, np.zeros(3))

    def test_pure_proportional(self):
        g = unit_gains(1)
        g.pid_roll = type(g.pid_roll)(kp=0.02, ki=0.0, kd=0.0)
        pid = AttitudePid(g)
        m = pid.update(FollowerCommand(theta_d=0.0, phi_d=0.1, f=0.5),
                       0.0, 0.0, 0.0, np.zeros(3), 0.01)
        assert abs(m[0] - 0.002) < 1e-15

    def test_integral_accumulation(self):
        g = unit_gains(1)
        g.pid_roll = type(g.pid_roll)(kp=0.0, ki=0.05, kd=0.0)
        g.integral_clamp = 1.0
        pid = AttitudePid(g)
        for _ in range(100):     # 1 s of constant error 0.1
            m = pid.update(FollowerCommand(theta_d=0.0, phi_d=0.1, f=0.5),
                           0.0, 0.0, 0.0, np.zeros(3), 0.01)
        assert abs(m[0] - 0.05 * 0.1 * 1.0) < 1e-12

    def test_anti_windup_clamp(self):
        g = unit_gains(1)
        g.pid_roll = type(g.pid_roll)(kp=0.0, ki=0.05, kd=0.0)
        g.integral_clamp = 0.001
        pid = AttitudePid(g)
        for _ in range(10000):
            m = pid.update(FollowerCommand(theta_d=0.0, phi_d=1.0, f=0.5),
                           0.0, 0.0, 0.0, np.zeros(3), 0.01)
        assert abs(m[0]) <= 0.001 + 1e-15


class TestLeaderPd:
    def test_at_target_hover(self, rod_params, rod_eq, rod_gains):
        st = hover_state(rod_params)
        li = leader_pd(st, st.x0, rod_gains, rod_params, rod_eq)
        assert li.phi == 0.0 and li.theta == 0.0
        assert abs(li.f - rod_eq.f[0]) < 1e-12

    def test_target_ahead_pitches_forward(self, rod_params, rod_eq, rod_gains):
        st = hover_state(rod_params)
        li = leader_pd(st, st.x0 + np.array([1.0, 0.0, 0.0]), rod_gains,
                       rod_params, rod_eq)
        assert 0.0 < li.theta <= rod_gains.angle_bound


class TestEquivariance:
    def test_yaw_rotation_equivariance(self, rod_params, rod_eq):
        # isotropic gains commute with yaw rotations of the whole scene
        n = 2
        iso = ControlGains(
            k_eta0=np.tile(np.diag([2.0, 2.0, 3.0]), (n, 1, 1)),
            k_eta0_dot=np.tile(np.diag([1.0, 1.0, 1.5]), (n, 1, 1)),
            k_xi=np.tile(np.array([[2.5, 0.0], [0.0, 2.5], [0.0, 0.0]]), (n, 1, 1)),
            k_xi_dot=np.tile(np.array([[1.2, 0.0], [0.0, 1.2], [0.0, 0.0]]), (n, 1, 1)))
        rng = np.random.default_rng(14)
        psi = 0.7
        z = exp_so3([0.0, 0.0, psi])

        from cablelift.dynamics import SystemParams, SystemState
        from cablelift.linearization import build_equilibrium

        st = tilted_state(rod_params, 9.0, azimuth_deg=25.0)
        st.r0 = exp_so3(rng.normal(size=3) * 0.1)
        st.om0 = rng.normal(size=3) * 0.3
        st.v0 = rng.normal(size=3) * 0.3
        u1 = follower_outer_loop(st, rod_eq, iso, 1)

        params_r = SystemParams(m0=rod_params.m0, j0=z @ rod_params.j0 @ z.T,
                                masses=rod_params.masses, lengths=rod_params.lengths,
                                rho=(z @ rod_params.rho.T).T)
        eq_r = build_equilibrium(params_r)
        st_r = SystemState(z @ st.x0, z @ st.v0, z @ st.r0 @ z.T, z @ st.om0,
                           (z @ st.q.T).T, (z @ st.om.T).T)
        u2 = follower_outer_loop(st_r, eq_r, iso, 1)
        assert np.max(np.abs(u2 - z @ u1)) < 1e-12


class TestSynthesis:
    def test_rod_margin(self, rod_params, rod_model, rod_gains):
        k = stack_gains(rod_gains, 2,
                        k_h=leader_hold_gain_matrix(rod_gains, rod_params))
        eigs = controlled_subspace_eigs(rod_model, k)
        assert np.max(eigs.real) <= -0.1

    def test_triangle_margin(self, tri_params, tri_model, tri_gains):
        k = stack_gains(tri_gains, 3,
                        k_h=leader_hold_gain_matrix(tri_gains, tri_params))
        eigs = controlled_subspace_eigs(tri_model, k)
        assert np.max(eigs.real) <= -0.1

    def test_gate_rejects_weak_margin(self, rod_params, rod_model):
        with pytest.raises(GainSynthesisError):
            synthesize_gains(rod_params, rod_model, stability_margin=50.0)

    def test_single_quad_has_no_followers(self, pend_params, pend_model):
        with pytest.raises(GainSynthesisError):
            synthesize_gains(pend_params, pend_model)

    def test_serialization_roundtrip(self, rod_gains):
        d = rod_gains.to_dict()
        back = ControlGains.from_dict(d)
        assert np.array_equal(back.k_eta0, rod_gains.k_eta0)
        assert np.array_equal(back.k_xi, rod_gains.k_xi)
        assert back.pid_roll == rod_gains.pid_roll
        assert np.array_equal(back.leader_kp, rod_gains.leader_kp)


class TestNoise:
    def test_noise_is_deterministic_per_seed(self, rod_params, rod_eq, rod_gains):
        st = tilted_state(rod_params, 5.0)
        outs = []
        for _ in range(2):
            noise = MeasurementNoise(sigma_att=0.01, sigma_rate=0.01,
                                     sigma_cable=0.01, sigma_cable_rate=0.01,
                                     rng=np.random.default_rng(42))
            outs.append(follower_outer_loop(st, rod_eq, rod_gains, 1, noise=noise))
        assert np.array_equal(outs[0], outs[1])
        clean = follower_outer_loop(st, rod_eq, rod_gains, 1)
        assert not np.array_equal(outs[0], clean)
