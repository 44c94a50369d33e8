import math

import numpy as np
import pytest

from sideslip import (G_STANDARD, SensorSample, StateSpace, VehicleParams,
                      corrected_lateral_accel, dynamics_state_space,
                      forward_euler, kinematics_state_space,
                      linear_tire_forces, planar_kinematics_state_space)


class TestVehicleParams:
    def test_wheelbase(self, params):
        assert params.wheelbase == pytest.approx(3.009)

    def test_nominal_vector(self, params):
        np.testing.assert_allclose(params.theta_nominal, [160776.0, 254100.0])

    @pytest.mark.parametrize("field", ["m", "i_z", "l_f", "l_r", "c_f_nom", "c_r_nom"])
    def test_rejects_nonpositive(self, params, field):
        values = {k: getattr(params, k)
                  for k in ("m", "i_z", "l_f", "l_r", "c_f_nom", "c_r_nom", "g")}
        values[field] = 0.0
        with pytest.raises(ValueError):
            VehicleParams(**values)


class TestLinearTireForces:
    def test_zero_slip(self, params):
        f_yf, f_yr = linear_tire_forces(params, params.c_f_nom, params.c_r_nom,
                                        v_y=0.0, r=0.0, v_x=20.0, delta_f=0.0)
        assert f_yf == 0.0 and f_yr == 0.0

    def test_front_force_from_steering(self, params):
        # 160776 N/rad * 0.01 rad slip
        f_yf, _ = linear_tire_forces(params, params.c_f_nom, params.c_r_nom,
                                     v_y=0.0, r=0.0, v_x=20.0, delta_f=0.01)
        assert f_yf == pytest.approx(1607.76)

    def test_rear_force_from_lateral_speed(self, params):
        # 254100 * (-1/20)
        _, f_yr = linear_tire_forces(params, params.c_f_nom, params.c_r_nom,
                                     v_y=1.0, r=0.0, v_x=20.0, delta_f=0.0)
        assert f_yr == pytest.approx(-12705.0)

    def test_rejects_zero_speed(self, params):
        with pytest.raises(ValueError):
            linear_tire_forces(params, 1e5, 1e5, 0.0, 0.0, 0.0, 0.0)


class TestDynamicsStateSpace:
    def test_gravity_column(self, params):
        ss = dynamics_state_space(params, params.c_f_nom, params.c_r_nom, 20.0)
        assert ss.a[0, 2] == -G_STANDARD

    def test_disturbance_rows_are_zero(self, params):
        ss = dynamics_state_space(params, params.c_f_nom, params.c_r_nom, 15.0)
        np.testing.assert_array_equal(ss.a[2:], np.zeros((2, 4)))
        np.testing.assert_array_equal(ss.b[2:], np.zeros((2, 1)))

    def test_a11_hand_value(self, params):
        # -(c_f + c_r) / (m v_x) evaluated by hand for the default sedan
        ss = dynamics_state_space(params, params.c_f_nom, params.c_r_nom, 20.0)
        expected = -(160776.0 + 254100.0) / (2300.132 * 20.0)
        assert ss.a[0, 0] == pytest.approx(expected, rel=1e-12)
        assert ss.a[0, 0] == pytest.approx(-9.01853, abs=1e-5)

    def test_top_left_block_matches_unaugmented_model(self, params, rng):
        # oracle: the plain two-state lateral model written out by hand
        for _ in range(10):
            c_f, c_r = rng.uniform(5e4, 3e5, size=2)
            v_x = rng.uniform(3.0, 40.0)
            m, i_z, l_f, l_r = params.m, params.i_z, params.l_f, params.l_r
            a_2dof = np.array([
                [-(c_f + c_r) / (m * v_x), -v_x - (l_f * c_f - l_r * c_r) / (m * v_x)],
                [(-l_f * c_f + l_r * c_r) / (i_z * v_x),
                 -(l_f**2 * c_f + l_r**2 * c_r) / (i_z * v_x)],
            ])
            ss = dynamics_state_space(params, c_f, c_r, v_x)
            np.testing.assert_allclose(ss.a[:2, :2], a_2dof, rtol=1e-15)

    def test_measurement_row_matches_force_balance(self, params, rng):
        # the a_y_sen output row must reproduce specific force + bias for any
        # state: C x + D u == (F_yf + F_yr)/m + d
        for _ in range(50):
            c_f, c_r = rng.uniform(5e4, 3e5, size=2)
            v_x = rng.uniform(2.0, 40.0)
            v_y, r = rng.normal(size=2)
            sin_phi, d = rng.uniform(-0.3, 0.3), rng.normal()
            delta_f = rng.uniform(-0.3, 0.3)
            ss = dynamics_state_space(params, c_f, c_r, v_x)
            x = np.array([v_y, r, sin_phi, d])
            lhs = (ss.c @ x + ss.d @ np.array([delta_f]))[0]
            f_yf, f_yr = linear_tire_forces(params, c_f, c_r, v_y, r, v_x, delta_f)
            rhs = (f_yf + f_yr) / params.m + d
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_rejects_zero_speed(self, params):
        with pytest.raises(ValueError):
            dynamics_state_space(params, 1e5, 1e5, 0.0)


class TestKinematicsStateSpace:
    def test_zero_yaw_rate(self):
        ss = kinematics_state_space(0.0)
        expected = np.zeros((3, 3))
        expected[1, 2] = -G_STANDARD
        np.testing.assert_array_equal(ss.a, expected)

    @pytest.mark.parametrize("r", [-0.7, 0.05, 2.0])
    def test_skew_pair(self, r):
        ss = kinematics_state_space(r)
        assert ss.a[0, 1] == r and ss.a[1, 0] == -r

    def test_output_selects_longitudinal_speed(self):
        np.testing.assert_array_equal(kinematics_state_space(0.3).c, [[1.0, 0.0, 0.0]])

    def test_bank_row_deleted_equals_planar(self):
        # consistency between the 3-state and 2-state kinematics variants
        for r in (-0.4, 0.0, 0.9):
            full = kinematics_state_space(r)
            planar = planar_kinematics_state_space(r)
            np.testing.assert_array_equal(full.a[:2, :2], planar.a)
            np.testing.assert_array_equal(full.b[:2, :], planar.b)
            np.testing.assert_array_equal(full.c[:, :2], planar.c)


class TestPlanarKinematics:
    def test_zero_rate_gives_zero_matrix(self):
        np.testing.assert_array_equal(planar_kinematics_state_space(0.0).a, np.zeros((2, 2)))

    def test_rotation_entries(self):
        ss = planar_kinematics_state_space(0.5)
        np.testing.assert_array_equal(ss.a, [[0.0, 0.5], [-0.5, 0.0]])

    def test_input_matrix_identity(self):
        for r in (0.0, -1.2, 0.3):
            np.testing.assert_array_equal(planar_kinematics_state_space(r).b, np.eye(2))


class TestForwardEuler:
    def test_identity_on_zero_dynamics(self):
        ss = StateSpace(np.zeros((2, 2)), np.eye(2), np.eye(2), np.zeros((2, 2)))
        disc = forward_euler(ss, 0.01)
        np.testing.assert_array_equal(disc.a, np.eye(2))

    def test_rotation_example(self):
        ss = StateSpace(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.zeros((2, 1)),
                        np.eye(2), np.zeros((2, 1)))
        disc = forward_euler(ss, 0.01)
        np.testing.assert_allclose(disc.a, [[1.0, 0.01], [-0.01, 1.0]])

    def test_linearity_in_a(self, rng):
        a = rng.normal(size=(3, 3))
        ss = StateSpace(a, np.zeros((3, 1)), np.eye(3), np.zeros((3, 1)))
        scaled = StateSpace(2.5 * a, np.zeros((3, 1)), np.eye(3), np.zeros((3, 1)))
        np.testing.assert_allclose(forward_euler(scaled, 0.02).a,
                                   2.5 * a * 0.02 + np.eye(3), rtol=1e-15)

    def test_keeps_output_matrices(self, rng):
        ss = StateSpace(rng.normal(size=(2, 2)), rng.normal(size=(2, 1)),
                        rng.normal(size=(1, 2)), rng.normal(size=(1, 1)))
        disc = forward_euler(ss, 0.05)
        np.testing.assert_array_equal(disc.c, ss.c)
        np.testing.assert_array_equal(disc.d, ss.d)

    def test_rejects_nonpositive_dt(self):
        ss = planar_kinematics_state_space(0.1)
        with pytest.raises(ValueError):
            forward_euler(ss, 0.0)


class TestCorrectedLateralAccel:
    def test_zero(self):
        assert corrected_lateral_accel(0.0, 0.0, 0.0) == 0.0

    def test_bank_and_bias_removed(self):
        got = corrected_lateral_accel(5.0, math.sin(math.radians(14.0)), 0.1)
        assert got == pytest.approx(5.0 - G_STANDARD * math.sin(math.radians(14.0)) - 0.1)
        assert got == pytest.approx(2.5276, abs=5e-4)

    def test_pure_bias_cancellation(self):
        assert corrected_lateral_accel(1.0, 0.0, 1.0) == 0.0
