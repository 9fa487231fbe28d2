import numpy as np
import pytest

from cablelift.dynamics import (ActuationCommand, DegenerateGeometryError,
                                NumericalFailure, SystemParams, SystemState,
                                accelerations, cable_tensions, energy,
                                eom_residual, quad_position, step, step_many)
from cablelift.geometry import E3, exp_so3
from cablelift.oracle import oracle_accelerations

from conftest import hover_state, random_state, tilted_state


def zero_cmd(n):
    return ActuationCommand.reduced(np.zeros((n, 3)))


def hover_cmd(params):
    f = (params.masses + params.m0 / params.n) * params.g
    return ActuationCommand.reduced(np.outer(f, E3))


class TestParams:
    def test_rejects_nonpositive_mass(self):
        with pytest.raises(ValueError):
            SystemParams(m0=0.0, j0=np.eye(3), masses=[0.05], lengths=[0.5],
                         rho=[[0, 0, 0]])

    def test_rejects_zero_cable(self):
        with pytest.raises(ValueError):
            SystemParams(m0=0.1, j0=np.eye(3), masses=[0.05], lengths=[0.0],
                         rho=[[0, 0, 0]])

    def test_rejects_non_spd_inertia(self):
        with pytest.raises(ValueError):
            SystemParams(m0=0.1, j0=-np.eye(3), masses=[0.05], lengths=[0.5],
                         rho=[[0, 0, 0]])


class TestQuadPosition:
    def test_hover_geometry(self, rod_params):
        st = hover_state(rod_params)
        assert np.allclose(quad_position(st, rod_params, 0), [0.3, 0.0, 0.5])

    def test_centered_attachment(self, pend_params):
        st = hover_state(pend_params, x0=(1.0, 2.0, 3.0))
        assert np.allclose(quad_position(st, pend_params, 0), [1.0, 2.0, 3.5])

    def test_rotated_payload(self, rod_params):
        st = hover_state(rod_params)
        st.r0 = exp_so3([0.0, 0.0, np.pi / 2])
        assert np.allclose(quad_position(st, rod_params, 0), [0.0, 0.3, 0.5],
                           atol=1e-12)


class TestEnergy:
    def test_hover_rest_energy(self, rod_params):
        st = hover_state(rod_params)
        t, v = energy(st, rod_params)
        assert t == 0.0
        assert abs(v - 2 * 0.052 * 9.81 * 0.5) < 1e-12

    def test_zero_velocity_zero_kinetic(self, tri_params):
        st = tilted_state(tri_params, 12.0)
        t, _ = energy(st, tri_params)
        assert t == 0.0

    def test_rigid_translation_kinetic(self, rod_params):
        st = hover_state(rod_params)
        st.v0 = np.array([1.0, 0.0, 0.0])
        t, _ = energy(st, rod_params)
        assert abs(t - 0.5 * rod_params.total_mass) < 1e-12


class TestAccelerations:
    def test_equilibrium_is_stationary(self, rod_params):
        der = accelerations(hover_state(rod_params), hover_cmd(rod_params), rod_params)
        assert np.max(np.abs(der.ddx0)) <= 1e-10
        assert np.max(np.abs(der.dom0)) <= 1e-10
        assert np.max(np.abs(der.ddq)) <= 1e-10

    def test_free_fall_uniform(self, rod_params):
        st = tilted_state(rod_params, 10.0)
        der = accelerations(st, zero_cmd(2), rod_params)
        assert np.allclose(der.ddx0, [0.0, 0.0, -rod_params.g], atol=1e-12)
        assert np.max(np.abs(der.dom0)) < 1e-12
        assert np.max(np.abs(der.ddq)) < 1e-12

    def test_residual_satisfies_equations(self, tri_params):
        rng = np.random.default_rng(7)
        for _ in range(10):
            st = random_state(tri_params, rng)
            u = rng.normal(size=(3, 3))
            cmd = ActuationCommand.reduced(u)
            der = accelerations(st, cmd, tri_params)
            assert eom_residual(st, cmd, tri_params, der) <= 1e-10

    def test_unit_norm_consistency(self, rod_params):
        rng = np.random.default_rng(8)
        for _ in range(10):
            st = random_state(rod_params, rng)
            der = accelerations(st, zero_cmd(2), rod_params)
            for i in range(2):
                qdot = np.cross(st.om[i], st.q[i])
                assert abs(np.dot(der.ddq[i], st.q[i]) + np.dot(qdot, qdot)) <= 1e-8

    @pytest.mark.parametrize("which", ["pend", "rod", "tri"])
    def test_matches_lagrangian_oracle(self, which, pend_params, rod_params,
                                       tri_params):
        params = {"pend": pend_params, "rod": rod_params, "tri": tri_params}[which]
        rng = np.random.default_rng({"pend": 101, "rod": 102, "tri": 103}[which])
        worst = 0.0
        for _ in range(100):
            st = random_state(params, rng)
            u = rng.normal(size=(params.n, 3)) * 0.5
            der = accelerations(st, ActuationCommand.reduced(u), params)
            oxdd, odom, oqdd = oracle_accelerations(st, u, params)
            worst = max(worst,
                        np.max(np.abs(der.ddx0 - oxdd)) / (1.0 + np.linalg.norm(oxdd)),
                        np.max(np.abs(der.dom0 - odom)) / (1.0 + np.linalg.norm(odom)),
                        np.max(np.abs(der.ddq - oqdd)) / (1.0 + np.max(np.abs(oqdd))))
        assert worst <= 1e-6

    def test_full_mode_matches_reduced_at_level_attitude(self, rod_params):
        st = hover_state(rod_params)
        f = (rod_params.masses + rod_params.m0 / 2) * rod_params.g
        der_full = accelerations(st, ActuationCommand.full(f, np.zeros((2, 3))),
                                 rod_params)
        der_red = accelerations(st, hover_cmd(rod_params), rod_params)
        assert np.allclose(der_full.ddx0, der_red.ddx0)
        assert np.allclose(der_full.ddq, der_red.ddq)

    def test_degenerate_inertia_raises(self, rod_params):
        bad = SystemParams(m0=rod_params.m0, j0=rod_params.j0,
                           masses=rod_params.masses, lengths=rod_params.lengths,
                           rho=rod_params.rho, validate=False)
        bad.j0bar = np.zeros((3, 3))     # force a singular system
        st = hover_state(bad)
        with pytest.raises(DegenerateGeometryError):
            accelerations(st, hover_cmd(bad), bad)


class TestTension:
    def test_hover_tension_shares_weight(self, tri_params):
        st = hover_state(tri_params)
        t = cable_tensions(st, hover_cmd(tri_params), tri_params)
        assert np.allclose(t, tri_params.m0 * tri_params.g / 3, atol=1e-12)

    def test_free_fall_tension_zero(self, rod_params):
        st = tilted_state(rod_params, 10.0)
        t = cable_tensions(st, zero_cmd(2), rod_params)
        assert np.max(np.abs(t)) < 1e-12


class TestStep:
    def test_dt_bounds(self, rod_params):
        st = hover_state(rod_params)
        with pytest.raises(ValueError):
            step(st, hover_cmd(rod_params), rod_params, 0.02)
        with pytest.raises(ValueError):
            step(st, hover_cmd(rod_params), rod_params, 0.0)

    def test_equilibrium_hold_1000_steps(self, rod_params):
        st = hover_state(rod_params)
        out = step_many(st, hover_cmd(rod_params), rod_params, 1e-3, 1000)
        assert np.max(np.abs(out.x0 - st.x0)) <= 1e-9
        assert np.max(np.abs(out.q - st.q)) <= 1e-9

    def test_free_fall_closed_form(self, rod_params):
        st = tilted_state(rod_params, 10.0)
        out = step_many(st, zero_cmd(2), rod_params, 1e-3, 500)
        assert abs(out.x0[2] - (-0.5 * rod_params.g * 0.25)) < 1e-9
        assert np.max(np.abs(out.q - st.q)) < 1e-9   # shape frozen in free fall

    def test_energy_conservation_swinging(self, rod_params):
        # conservative motion: no thrust, nonzero initial rates
        rng = np.random.default_rng(9)
        st = random_state(rod_params, rng)
        st.x0 = np.zeros(3)
        st.v0 = np.zeros(3)
        e0 = sum(energy(st, rod_params))
        out = st
        for _ in range(50):
            out = step_many(out, zero_cmd(2), rod_params, 1e-3, 100)
        e1 = sum(energy(out, rod_params))
        assert abs(e1 - e0) / abs(e0) <= 1e-6

    def test_momentum_conservation_no_gravity(self, rod_params):
        params = SystemParams(m0=rod_params.m0, j0=rod_params.j0,
                              masses=rod_params.masses, lengths=rod_params.lengths,
                              rho=rod_params.rho, g=0.0)
        rng = np.random.default_rng(10)
        st = random_state(params, rng)

        def momentum(s):
            p = params.m0 * s.v0
            for i in range(2):
                qdot = np.cross(s.om[i], s.q[i])
                vi = s.v0 + s.r0 @ np.cross(s.om0, params.rho[i]) - params.lengths[i] * qdot
                p = p + params.masses[i] * vi
            return p

        p0 = momentum(st)
        out = step_many(st, zero_cmd(2), params, 1e-3, 2000)
        p1 = momentum(out)
        assert np.max(np.abs(p1 - p0)) / np.linalg.norm(p0) <= 1e-8

    def test_manifold_preserved_long_run(self, tri_params):
        rng = np.random.default_rng(11)
        st = random_state(tri_params, rng)
        out = step_many(st, zero_cmd(3), tri_params, 1e-3, 5000)
        for i in range(3):
            assert abs(np.linalg.norm(out.q[i]) - 1.0) <= 1e-8
            assert abs(np.dot(out.om[i], out.q[i])) <= 1e-8
            assert np.max(np.abs(out.rq[i].T @ out.rq[i] - np.eye(3))) <= 1e-8
        assert np.max(np.abs(out.r0.T @ out.r0 - np.eye(3))) <= 1e-8

    def test_fourth_order_convergence(self, rod_params):
        # fixed horizon, error vs a much finer reference; halving dt ~ 16x
        rng = np.random.default_rng(12)
        st = random_state(rod_params, rng, spread=0.4)
        u = ActuationCommand.reduced(np.outer(
            (rod_params.masses + rod_params.m0 / 2) * rod_params.g * 0.7, E3))
        horizon = 0.2

        def final_state(dt):
            return step_many(st, u, rod_params, dt, round(horizon / dt)).to_flat()

        ref = final_state(1e-6)
        e1 = np.max(np.abs(final_state(2e-3) - ref))
        e2 = np.max(np.abs(final_state(1e-3) - ref))
        order = np.log2(e1 / e2)
        assert 3.5 <= order <= 4.5

    def test_nan_failure_carries_state(self, rod_params):
        st = hover_state(rod_params)
        cmd = ActuationCommand.reduced(np.full((2, 3), 1e300))
        with pytest.raises(NumericalFailure) as exc:
            step_many(st, cmd, rod_params, 1e-3, 10)
        assert exc.value.state is not None
